#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aucpd/data.hpp"
#include "aucpd/errors.hpp"
#include "aucpd/eval.hpp"
#include "aucpd/model.hpp"
#include "aucpd/numerics.hpp"
#include "aucpd/objective.hpp"
#include "aucpd/schedule.hpp"
#include "aucpd/streaming.hpp"

namespace aucpd {

// Stochastic first-order oracle for the saddle objective. Kept behind
// std::function so tests can substitute synthetic gradients.
struct SaddleOracle {
  std::function<SaddleGrads(const PrimalDualState&, const ClassPrior&, const Example&)> grads;
  std::function<double(std::span<const double> w, std::span<const double> x)> score;
};

inline SaddleOracle make_auc_oracle(const ModelArch& arch) {
  SaddleOracle o;
  o.grads = [arch](const PrimalDualState& s, const ClassPrior& prior, const Example& z) {
    return saddle_grads(arch, s, prior, z);
  };
  o.score = [arch](std::span<const double> w, std::span<const double> x) {
    return forward(arch, w, x);
  };
  return o;
}

struct TraceRow {
  std::int64_t step = 0;
  int stage = 0;
  std::int64_t samples = 0;
  double train_auc = std::numeric_limits<double>::quiet_NaN();
  double test_auc = std::numeric_limits<double>::quiet_NaN();
  double pairwise_loss = std::numeric_limits<double>::quiet_NaN();
  double elapsed_s = 0.0;
};

// Everything needed to recheck the adagrad stopping rule after the fact:
// per-coordinate gradient column norms at the stopping step and one step
// earlier.
struct AdaGradStageLog {
  int k = 0;
  std::int64_t T_k = 0;
  double M_k = 0.0;
  double delta = 0.0;
  double L_tilde = 0.0;
  bool capped = false;
  Vec s_at_stop;
  Vec s_before_stop;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::vector<std::string> events;
  std::vector<AdaGradStageLog> adagrad_stages;
  std::int64_t total_steps = 0;
  std::int64_t total_samples = 0;
  double wall_seconds = 0.0;
};

using StepObserver = std::function<void(std::int64_t step, const PrimalDualState&)>;

struct RunConfig {
  ScheduleParams sched;
  int batch = 1;                 // samples averaged per stochastic gradient
  std::int64_t eval_every = 0;   // 0: record only the final row
  const Dataset* train_eval = nullptr;
  const Dataset* test_eval = nullptr;
  bool wall_timing = false;      // off by default so traces are reproducible

  // prior handling: known p, or streamed estimates consumed online
  bool streaming_prior = false;
  double prior_p = 0.5;          // known-p value; initial guess until the tracker is ready

  // pga
  double R1 = 100.0;
  double R2 = 2.0;

  // oauc / ce_sgd
  std::int64_t total_steps = 10000;
  bool constant_step = false;    // oauc cross-check mode: eta_t = eta0
  std::vector<std::int64_t> decay_steps;

  std::int64_t adagrad_T_max = 1000000;
  StepObserver observer;
};

struct RunResult {
  PrimalDualState state;
  RunTrace trace;

  Model final_model(const ModelArch& arch) const { return Model{arch, state.w}; }
};

namespace detail {

class WallClock {
 public:
  explicit WallClock(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

// Known prior, or streamed Algorithm-4 estimates. Gradients always use the
// estimate frozen before the current sample is consumed.
class PriorSource {
 public:
  PriorSource(const RunConfig& cfg, RunTrace& trace)
      : streaming_(cfg.streaming_prior), guess_(ClassPrior::known(cfg.prior_p)), trace_(trace) {}

  ClassPrior current() {
    if (!streaming_) return guess_;
    if (!tracker_.ready()) {
      if (!warned_unready_) {
        trace_.events.push_back("prior tracker not ready; using initial guess");
        warned_unready_ = true;
      }
      return guess_;
    }
    if (tracker_.snapshot_clamps() && !warned_clamp_) {
      trace_.events.push_back("pq_hat clamped at snapshot");
      warned_clamp_ = true;
    }
    return tracker_.snapshot();
  }

  void consume(std::span<const int> labels) {
    if (streaming_) tracker_.update(labels);
  }

  const PriorTracker& tracker() const { return tracker_; }

 private:
  bool streaming_;
  ClassPrior guess_;
  RunTrace& trace_;
  PriorTracker tracker_;
  bool warned_unready_ = false;
  bool warned_clamp_ = false;
};

class TraceRecorder {
 public:
  TraceRecorder(const RunConfig& cfg, const ModelArch& arch, RunTrace& trace)
      : cfg_(cfg), arch_(arch), trace_(trace), clock_(cfg.wall_timing) {}

  void maybe_record(std::int64_t step, int stage, std::int64_t samples,
                    std::span<const double> w, bool force = false) {
    const bool due = cfg_.eval_every > 0 && step % cfg_.eval_every == 0;
    if (!(force || due)) return;
    if (!trace_.rows.empty() && trace_.rows.back().step == step) return;
    TraceRow row;
    row.step = step;
    row.stage = stage;
    row.samples = samples;
    row.elapsed_s = clock_.seconds();
    if (cfg_.train_eval != nullptr) {
      row.train_auc = dataset_auc(w, *cfg_.train_eval);
      row.pairwise_loss = pairwise_auc_loss(Model{arch_, Vec(w.begin(), w.end())}, *cfg_.train_eval);
    }
    if (cfg_.test_eval != nullptr) row.test_auc = dataset_auc(w, *cfg_.test_eval);
    trace_.rows.push_back(row);
  }

 private:
  double dataset_auc(std::span<const double> w, const Dataset& d) const {
    std::vector<double> pos, neg;
    for (const auto& e : d.examples) (e.y == +1 ? pos : neg).push_back(forward(arch_, w, e.x));
    return auc_binary(pos, neg);
  }

  const RunConfig& cfg_;
  ModelArch arch_;
  RunTrace& trace_;
  WallClock clock_;
};

// One averaged stochastic gradient: draws cfg.batch examples, averages the
// per-example gradients under the pre-batch prior, then feeds the labels to
// the tracker.
inline SaddleGrads draw_grads(const SaddleOracle& oracle, ExampleStream& src,
                              const PrimalDualState& state, PriorSource& prior, int batch,
                              std::int64_t& samples) {
  const ClassPrior p = prior.current();
  SaddleGrads acc;
  acc.grad_w.assign(state.w.size(), 0.0);
  std::vector<int> labels;
  labels.reserve(batch);
  for (int b = 0; b < batch; ++b) {
    const Example z = src.next();
    labels.push_back(z.y);
    SaddleGrads g = oracle.grads(state, p, z);
    axpy(1.0, g.grad_w, acc.grad_w);
    acc.grad_a += g.grad_a;
    acc.grad_b += g.grad_b;
    acc.grad_alpha += g.grad_alpha;
  }
  const double inv = 1.0 / static_cast<double>(batch);
  scale(inv, acc.grad_w);
  acc.grad_a *= inv;
  acc.grad_b *= inv;
  acc.grad_alpha *= inv;
  samples += batch;
  prior.consume(labels);
  return acc;
}

inline void check_state_finite(const PrimalDualState& s, std::int64_t step) {
  if (!all_finite(s.w) || !std::isfinite(s.a) || !std::isfinite(s.b) || !std::isfinite(s.alpha))
    throw NumericError("iterate diverged to non-finite values", step);
}

// Conditional score means over a fresh minibatch; the closed-form maximizer
// of the dual given the averaged primal. Returns false when a class is
// missing from the draw.
inline bool dual_restart(const SaddleOracle& oracle, ExampleStream& src, PriorSource& prior,
                         const Vec& w, std::int64_t m_k, std::int64_t& samples, double& alpha_out) {
  double sum_pos = 0.0, sum_neg = 0.0;
  std::int64_t n_pos = 0, n_neg = 0;
  std::vector<int> labels;
  labels.reserve(m_k);
  for (std::int64_t i = 0; i < m_k; ++i) {
    const Example z = src.next();
    labels.push_back(z.y);
    const double h = oracle.score(w, z.x);
    if (z.y == +1) {
      sum_pos += h;
      ++n_pos;
    } else {
      sum_neg += h;
      ++n_neg;
    }
  }
  samples += m_k;
  prior.consume(labels);
  if (n_pos == 0 || n_neg == 0) return false;
  alpha_out = sum_neg / static_cast<double>(n_neg) - sum_pos / static_cast<double>(n_pos);
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PPD-SG: proximal primal-dual stochastic gradient with geometric step decay,
// per-stage primal averaging (including the stage anchor), and a minibatch
// dual restart at every stage end.
// ---------------------------------------------------------------------------
inline RunResult ppd_sg_run(const Model& init, const SaddleOracle& oracle, ExampleStream& src,
                            const RunConfig& cfg, Rng /*rng*/ = Rng(0)) {
  cfg.sched.validate();
  const double gamma = cfg.sched.resolved_gamma();
  const double prox = std::isinf(gamma) ? 0.0 : 1.0 / gamma;

  RunResult res;
  res.state = PrimalDualState{init.w, 0.0, 0.0, 0.0};
  detail::TraceRecorder rec(cfg, init.arch, res.trace);
  detail::PriorSource prior(cfg, res.trace);

  std::int64_t step = 0, samples = 0;
  rec.maybe_record(0, 0, 0, res.state.w, /*force=*/true);

  for (int k = 1; k <= cfg.sched.K; ++k) {
    const StagePlan plan = cfg.sched.mode == ScheduleMode::theoretical
                               ? schedule_theoretical(cfg.sched, k)
                               : schedule_practical(cfg.sched, k);
    const Vec anchor_w = res.state.w;
    const double anchor_a = res.state.a, anchor_b = res.state.b;
    const double alpha_stage_start = res.state.alpha;

    // averages accumulate deviations from the anchor: the t = 0 term is zero,
    // and a stage whose iterates never move averages back to the anchor
    // exactly
    Vec dev_w(res.state.w.size(), 0.0);
    double dev_a = 0.0, dev_b = 0.0;
    for (std::int64_t t = 1; t < plan.T_k; ++t) {
      const SaddleGrads g = detail::draw_grads(oracle, src, res.state, prior, cfg.batch, samples);
      for (std::size_t i = 0; i < res.state.w.size(); ++i)
        res.state.w[i] -= plan.eta_k * (g.grad_w[i] + prox * (res.state.w[i] - anchor_w[i]));
      res.state.a -= plan.eta_k * (g.grad_a + prox * (res.state.a - anchor_a));
      res.state.b -= plan.eta_k * (g.grad_b + prox * (res.state.b - anchor_b));
      res.state.alpha += plan.eta_k * g.grad_alpha;
      ++step;
      detail::check_state_finite(res.state, step);
      for (std::size_t i = 0; i < res.state.w.size(); ++i)
        dev_w[i] += res.state.w[i] - anchor_w[i];
      dev_a += res.state.a - anchor_a;
      dev_b += res.state.b - anchor_b;
      if (cfg.observer) cfg.observer(step, res.state);
      rec.maybe_record(step, k, samples, res.state.w);
    }
    const double inv = 1.0 / static_cast<double>(plan.T_k);
    for (std::size_t i = 0; i < res.state.w.size(); ++i)
      res.state.w[i] = anchor_w[i] + dev_w[i] * inv;
    res.state.a = anchor_a + dev_a * inv;
    res.state.b = anchor_b + dev_b * inv;

    double alpha_hat = 0.0;
    if (detail::dual_restart(oracle, src, prior, res.state.w, plan.m_k, samples, alpha_hat)) {
      res.state.alpha = alpha_hat;
    } else {
      res.state.alpha = alpha_stage_start;
      res.trace.events.push_back("stage " + std::to_string(k) +
                                 ": dual-restart minibatch missing a class; alpha kept");
    }
  }
  rec.maybe_record(step, cfg.sched.K, samples, res.state.w, /*force=*/true);
  res.trace.total_steps = step;
  res.trace.total_samples = samples;
  return res;
}

// ---------------------------------------------------------------------------
// PPD-AdaGrad: same outer shell as PPD-SG; the inner loop is diagonal
// dual averaging,
//   u_{t+1} = u_0 - eta_k H_t^{-1} sum_{tau<=t} ghat_tau,
//   H_t = delta I + diag(||ghat_{1:t,i}||_2).
// In theoretical mode the stage length is the stopping time
//   T_k = inf{ tau : tau >= M_k max(term1, term2) },
// capped at adagrad_T_max; practical mode uses the fixed T_k schedule.
// ---------------------------------------------------------------------------
inline RunResult ppd_adagrad_run(const Model& init, const SaddleOracle& oracle, ExampleStream& src,
                                 const RunConfig& cfg, Rng /*rng*/ = Rng(0)) {
  cfg.sched.validate();
  const double gamma = cfg.sched.resolved_gamma();
  const double prox = std::isinf(gamma) ? 0.0 : 1.0 / gamma;
  const bool stopping_time = cfg.sched.mode == ScheduleMode::theoretical;

  RunResult res;
  res.state = PrimalDualState{init.w, 0.0, 0.0, 0.0};
  detail::TraceRecorder rec(cfg, init.arch, res.trace);
  detail::PriorSource prior(cfg, res.trace);
  const std::size_t dim_u = res.state.u_dim();
  const double dp3 = static_cast<double>(dim_u);
  const double c_const = 1.0 / std::sqrt(dp3);

  std::int64_t step = 0, samples = 0;
  rec.maybe_record(0, 0, 0, res.state.w, /*force=*/true);

  // delta must dominate ||ghat||_inf; when unset, calibrate from gradients at
  // the initial iterate.
  double delta = cfg.sched.delta;
  if (!(delta > 0.0)) {
    double max_inf = 0.0;
    for (int i = 0; i < 100; ++i) {
      const SaddleGrads g = detail::draw_grads(oracle, src, res.state, prior, 1, samples);
      Vec ghat = g.grad_w;
      ghat.push_back(g.grad_a);
      ghat.push_back(g.grad_b);
      ghat.push_back(-g.grad_alpha);
      max_inf = std::max(max_inf, norm_inf(ghat));
    }
    delta = std::max(1e-12, 1.1 * max_inf);
    res.trace.events.push_back("delta calibrated to " + std::to_string(delta) +
                               " from a 100-sample prefix");
  }

  for (int k = 1; k <= cfg.sched.K; ++k) {
    const StagePlan plan = stopping_time ? schedule_theoretical_adagrad(cfg.sched, k)
                                         : schedule_practical(cfg.sched, k);
    const Vec u0 = res.state.to_u();
    const Vec anchor_w = res.state.w;
    const double anchor_a = res.state.a, anchor_b = res.state.b;
    const double alpha_stage_start = res.state.alpha;

    Vec grad_sum(dim_u, 0.0);   // sum_{tau<=t} ghat_tau
    Vec col_sq(dim_u, 0.0);     // per-coordinate sums of squares
    Vec s_now(dim_u, 0.0), s_prev(dim_u, 0.0);
    Vec dev_w(res.state.w.size(), 0.0);  // deviations from the anchor, t = 0 term is zero
    double dev_a = 0.0, dev_b = 0.0;
    std::int64_t count = 1;
    std::int64_t T_k = 1;
    bool capped = false;

    if (!(stopping_time || plan.T_k > 1)) {
      T_k = plan.T_k;  // degenerate fixed stage: no inner steps
    } else {
      for (std::int64_t tau = 1;; ++tau) {
        const SaddleGrads g =
            detail::draw_grads(oracle, src, res.state, prior, cfg.batch, samples);
        Vec ghat = g.grad_w;
        for (std::size_t i = 0; i < res.state.w.size(); ++i)
          ghat[i] += prox * (res.state.w[i] - u0[i]);
        ghat.push_back(g.grad_a + prox * (res.state.a - u0[dim_u - 3]));
        ghat.push_back(g.grad_b + prox * (res.state.b - u0[dim_u - 2]));
        ghat.push_back(-g.grad_alpha);

        s_prev = s_now;
        for (std::size_t i = 0; i < dim_u; ++i) {
          grad_sum[i] += ghat[i];
          col_sq[i] += ghat[i] * ghat[i];
          s_now[i] = std::sqrt(col_sq[i]);
        }
        Vec u_next(dim_u);
        for (std::size_t i = 0; i < dim_u; ++i)
          u_next[i] = u0[i] - plan.eta_k * grad_sum[i] / (delta + s_now[i]);
        res.state = PrimalDualState::from_u(u_next);
        ++step;
        detail::check_state_finite(res.state, step);
        if (cfg.observer) cfg.observer(step, res.state);
        rec.maybe_record(step, k, samples, res.state.w);

        if (stopping_time) {
          double max_col = 0.0, sum_col = 0.0;
          for (double s : s_now) {
            max_col = std::max(max_col, s);
            sum_col += s;
          }
          const double term1 =
              (delta + max_col) * std::max(1.0, 8.0 * cfg.sched.L_tilde * cfg.sched.L_tilde) /
              c_const;
          const double term2 = 2.0 * c_const * (sum_col + dp3 * (delta + max_col));
          const bool stop = static_cast<double>(tau) >= plan.M_k * std::max(term1, term2);
          capped = !stop && tau >= cfg.adagrad_T_max;
          if (stop || capped) {
            T_k = tau;
            AdaGradStageLog log;
            log.k = k;
            log.T_k = T_k;
            log.M_k = plan.M_k;
            log.delta = delta;
            log.L_tilde = cfg.sched.L_tilde;
            log.capped = capped;
            log.s_at_stop = s_now;
            log.s_before_stop = s_prev;
            res.trace.adagrad_stages.push_back(std::move(log));
            if (capped)
              res.trace.events.push_back("stage " + std::to_string(k) +
                                         ": adagrad stopping-time cap reached");
            break;  // the iterate just produced is not part of the average
          }
          for (std::size_t i = 0; i < res.state.w.size(); ++i)
            dev_w[i] += res.state.w[i] - anchor_w[i];
          dev_a += res.state.a - anchor_a;
          dev_b += res.state.b - anchor_b;
          ++count;
        } else {
          for (std::size_t i = 0; i < res.state.w.size(); ++i)
            dev_w[i] += res.state.w[i] - anchor_w[i];
          dev_a += res.state.a - anchor_a;
          dev_b += res.state.b - anchor_b;
          ++count;
          if (tau == plan.T_k - 1) {
            T_k = plan.T_k;
            break;
          }
        }
      }
    }
    (void)T_k;

    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < res.state.w.size(); ++i)
      res.state.w[i] = anchor_w[i] + dev_w[i] * inv;
    res.state.a = anchor_a + dev_a * inv;
    res.state.b = anchor_b + dev_b * inv;

    double alpha_hat = 0.0;
    if (detail::dual_restart(oracle, src, prior, res.state.w, plan.m_k, samples, alpha_hat)) {
      res.state.alpha = alpha_hat;
    } else {
      res.state.alpha = alpha_stage_start;
      res.trace.events.push_back("stage " + std::to_string(k) +
                                 ": dual-restart minibatch missing a class; alpha kept");
    }
  }
  rec.maybe_record(step, cfg.sched.K, samples, res.state.w, /*force=*/true);
  res.trace.total_steps = step;
  res.trace.total_samples = samples;
  return res;
}

// ---------------------------------------------------------------------------
// PGA baseline: polynomial decay eta_k = eta0/k, T_k = T0 k^2, ball
// projections on v and an interval clamp on alpha, both primal and dual
// averaged per stage over t = 1..T_k; the returned state is the average at a
// uniformly sampled stage.
// ---------------------------------------------------------------------------
inline RunResult pga_run(const Model& init, const SaddleOracle& oracle, ExampleStream& src,
                         const RunConfig& cfg, Rng rng) {
  cfg.sched.validate();
  if (!(cfg.R1 > 0.0 && cfg.R2 > 0.0)) throw ConfigError("pga: R1 and R2 must be positive");
  const double gamma = cfg.sched.resolved_gamma();
  const double prox = std::isinf(gamma) ? 0.0 : 1.0 / gamma;

  RunResult res;
  res.state = PrimalDualState{init.w, 0.0, 0.0, 0.0};
  detail::TraceRecorder rec(cfg, init.arch, res.trace);
  detail::PriorSource prior(cfg, res.trace);

  std::int64_t step = 0, samples = 0;
  rec.maybe_record(0, 0, 0, res.state.w, /*force=*/true);

  const auto project_v = [&](PrimalDualState& s) {
    const double n2 = squared_norm(s.w) + s.a * s.a + s.b * s.b;
    if (n2 > cfg.R1 * cfg.R1) {
      const double f = cfg.R1 / std::sqrt(n2);
      scale(f, s.w);
      s.a *= f;
      s.b *= f;
    }
  };

  std::vector<PrimalDualState> stage_avgs;
  stage_avgs.reserve(cfg.sched.K);
  for (int k = 1; k <= cfg.sched.K; ++k) {
    const double eta_k = cfg.sched.eta0 / static_cast<double>(k);
    const std::int64_t T_k = cfg.sched.T0 * static_cast<std::int64_t>(k) * k;
    const Vec anchor_w = res.state.w;
    const double anchor_a = res.state.a, anchor_b = res.state.b;

    const double anchor_alpha = res.state.alpha;
    Vec dev_w(res.state.w.size(), 0.0);
    double dev_a = 0.0, dev_b = 0.0, dev_alpha = 0.0;
    for (std::int64_t t = 1; t <= T_k; ++t) {
      const SaddleGrads g = detail::draw_grads(oracle, src, res.state, prior, cfg.batch, samples);
      for (std::size_t i = 0; i < res.state.w.size(); ++i)
        res.state.w[i] -= eta_k * (g.grad_w[i] + prox * (res.state.w[i] - anchor_w[i]));
      res.state.a -= eta_k * (g.grad_a + prox * (res.state.a - anchor_a));
      res.state.b -= eta_k * (g.grad_b + prox * (res.state.b - anchor_b));
      project_v(res.state);
      res.state.alpha = std::clamp(res.state.alpha + eta_k * g.grad_alpha, -cfg.R2, cfg.R2);
      ++step;
      detail::check_state_finite(res.state, step);
      for (std::size_t i = 0; i < res.state.w.size(); ++i)
        dev_w[i] += res.state.w[i] - anchor_w[i];
      dev_a += res.state.a - anchor_a;
      dev_b += res.state.b - anchor_b;
      dev_alpha += res.state.alpha - anchor_alpha;
      if (cfg.observer) cfg.observer(step, res.state);
      rec.maybe_record(step, k, samples, res.state.w);
    }
    // average over t = 1..T_k (the anchor itself is not part of it)
    const double inv = 1.0 / static_cast<double>(T_k);
    for (std::size_t i = 0; i < res.state.w.size(); ++i)
      res.state.w[i] = anchor_w[i] + dev_w[i] * inv;
    res.state.a = anchor_a + dev_a * inv;
    res.state.b = anchor_b + dev_b * inv;
    res.state.alpha = anchor_alpha + dev_alpha * inv;
    stage_avgs.push_back(res.state);
  }
  const std::size_t tau = rng.uniform_index(stage_avgs.size());
  res.state = stage_avgs[tau];
  res.trace.events.push_back("pga: returned stage average " + std::to_string(tau + 1) + " of " +
                             std::to_string(stage_avgs.size()));
  rec.maybe_record(step, cfg.sched.K, samples, res.state.w, /*force=*/true);
  res.trace.total_steps = step;
  res.trace.total_samples = samples;
  return res;
}

// ---------------------------------------------------------------------------
// OAUC baseline: single-loop primal-dual SGD with eta_t = eta0/sqrt(t), no
// proximal term, no restarts.
// ---------------------------------------------------------------------------
inline RunResult oauc_run(const Model& init, const SaddleOracle& oracle, ExampleStream& src,
                          const RunConfig& cfg, Rng /*rng*/ = Rng(0)) {
  if (cfg.total_steps < 1) throw ConfigError("oauc: total_steps must be >= 1");
  RunResult res;
  res.state = PrimalDualState{init.w, 0.0, 0.0, 0.0};
  detail::TraceRecorder rec(cfg, init.arch, res.trace);
  detail::PriorSource prior(cfg, res.trace);

  std::int64_t samples = 0;
  rec.maybe_record(0, 0, 0, res.state.w, /*force=*/true);
  for (std::int64_t t = 1; t <= cfg.total_steps; ++t) {
    const double eta =
        cfg.constant_step ? cfg.sched.eta0 : cfg.sched.eta0 / std::sqrt(static_cast<double>(t));
    const SaddleGrads g = detail::draw_grads(oracle, src, res.state, prior, cfg.batch, samples);
    axpy(-eta, g.grad_w, res.state.w);
    res.state.a -= eta * g.grad_a;
    res.state.b -= eta * g.grad_b;
    res.state.alpha += eta * g.grad_alpha;
    detail::check_state_finite(res.state, t);
    if (cfg.observer) cfg.observer(t, res.state);
    rec.maybe_record(t, 1, samples, res.state.w);
  }
  rec.maybe_record(cfg.total_steps, 1, samples, res.state.w, /*force=*/true);
  res.trace.total_steps = cfg.total_steps;
  res.trace.total_samples = samples;
  return res;
}

// ---------------------------------------------------------------------------
// Cross-entropy SGD baseline; the step size is divided by 10 at each listed
// decay step.
// ---------------------------------------------------------------------------
struct CeResult {
  Model model;
  RunTrace trace;
};

inline CeResult ce_sgd_run(const Model& init, ExampleStream& src, const RunConfig& cfg,
                           Rng /*rng*/ = Rng(0)) {
  if (cfg.total_steps < 1) throw ConfigError("ce_sgd: total_steps must be >= 1");
  if (!init.arch.sigmoid_output())
    throw ConfigError("ce_sgd: requires a sigmoid-output model kind");
  CeResult res;
  res.model = init;
  detail::TraceRecorder rec(cfg, init.arch, res.trace);
  const std::set<std::int64_t> decay(cfg.decay_steps.begin(), cfg.decay_steps.end());

  double eta = cfg.sched.eta0;
  std::int64_t samples = 0;
  bool clamp_logged = false;
  rec.maybe_record(0, 0, 0, res.model.w, /*force=*/true);
  for (std::int64_t t = 1; t <= cfg.total_steps; ++t) {
    if (decay.count(t)) eta /= 10.0;
    Vec acc(res.model.w.size(), 0.0);
    for (int b = 0; b < cfg.batch; ++b) {
      const Example z = src.next();
      if (z.y != +1 && z.y != -1) throw LabelError("ce_sgd: binary labels required");
      const auto sg = forward_grad(res.model, z.x);
      double h = sg.h;
      if (h < 1e-12 || h > 1.0 - 1e-12) {
        h = std::clamp(h, 1e-12, 1.0 - 1e-12);
        if (!clamp_logged) {
          res.trace.events.push_back("ce_sgd: score clamped away from {0,1} for the log");
          clamp_logged = true;
        }
      }
      const double dldh = (z.y == +1) ? -1.0 / h : 1.0 / (1.0 - h);
      axpy(dldh, sg.grad_w, acc);
    }
    samples += cfg.batch;
    axpy(-eta / static_cast<double>(cfg.batch), acc, res.model.w);
    if (!all_finite(res.model.w)) throw NumericError("ce_sgd: iterate diverged", t);
    rec.maybe_record(t, 1, samples, res.model.w);
  }
  rec.maybe_record(cfg.total_steps, 1, samples, res.model.w, /*force=*/true);
  res.trace.total_steps = cfg.total_steps;
  res.trace.total_samples = samples;
  return res;
}

// ---------------------------------------------------------------------------
// Empirical estimators for the schedule constants.
// ---------------------------------------------------------------------------

// Max of the two class-conditional score variances.
inline double estimate_sigma2(const Model& m, const Dataset& d) {
  double sum[2] = {0, 0}, sumsq[2] = {0, 0};
  std::size_t n[2] = {0, 0};
  for (const auto& e : d.examples) {
    const int c = e.y == +1 ? 0 : 1;
    const double h = forward(m, e.x);
    sum[c] += h;
    sumsq[c] += h * h;
    ++n[c];
  }
  if (n[0] == 0 || n[1] == 0) throw ClassMissingError("estimate_sigma2: need both classes");
  double best = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double mean = sum[c] / static_cast<double>(n[c]);
    best = std::max(best, sumsq[c] / static_cast<double>(n[c]) - mean * mean);
  }
  return best;
}

// Empirical max of ||(g_v, -g_alpha)||_2 at the given state, times 1.1.
inline double estimate_grad_bound(const ModelArch& arch, const PrimalDualState& state,
                                  const ClassPrior& prior, const Dataset& d) {
  if (d.empty()) throw EmptyInputError("estimate_grad_bound: empty dataset");
  double best = 0.0;
  for (const auto& e : d.examples) {
    const SaddleGrads g = saddle_grads(arch, state, prior, e);
    const double n2 = squared_norm(g.grad_w) + g.grad_a * g.grad_a + g.grad_b * g.grad_b +
                      g.grad_alpha * g.grad_alpha;
    best = std::max(best, n2);
  }
  return 1.1 * std::sqrt(best);
}

// ---------------------------------------------------------------------------
// Trace persistence. elapsed_s is 0 unless wall timing was requested, which
// keeps repeated runs byte-identical.
// ---------------------------------------------------------------------------
inline std::string trace_to_csv(const RunTrace& trace) {
  std::string out = "step,stage,samples,train_auc,test_auc,pairwise_loss,elapsed_s\n";
  char buf[256];
  const auto fmt = [&](double v) -> std::string {
    if (std::isnan(v)) return "nan";
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
  };
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%lld,", static_cast<long long>(r.step), r.stage,
                  static_cast<long long>(r.samples));
    out += buf;
    out += fmt(r.train_auc);
    out += ',';
    out += fmt(r.test_auc);
    out += ',';
    out += fmt(r.pairwise_loss);
    out += ',';
    std::snprintf(buf, sizeof(buf), "%.6f", r.elapsed_s);
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace aucpd
