#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "aucpd/data.hpp"
#include "aucpd/errors.hpp"
#include "aucpd/eval.hpp"
#include "aucpd/model.hpp"
#include "aucpd/numerics.hpp"

namespace aucpd {

// The min-max iterate u = (v, alpha) with v = (w, a, b).
struct PrimalDualState {
  Vec w;
  double a = 0.0;
  double b = 0.0;
  double alpha = 0.0;

  std::size_t v_dim() const { return w.size() + 2; }
  std::size_t u_dim() const { return w.size() + 3; }

  Vec to_u() const {
    Vec u(w);
    u.push_back(a);
    u.push_back(b);
    u.push_back(alpha);
    return u;
  }

  static PrimalDualState from_u(std::span<const double> u) {
    if (u.size() < 3) throw DimensionError("PrimalDualState: u must have length >= 3");
    PrimalDualState s;
    s.w.assign(u.begin(), u.end() - 3);
    s.a = u[u.size() - 3];
    s.b = u[u.size() - 2];
    s.alpha = u[u.size() - 1];
    return s;
  }
};

// Positive-class probability and an estimate of p(1-p). The two are carried
// separately because the streamed estimate of p(1-p) is not p_hat*(1-p_hat).
struct ClassPrior {
  double p = 0.5;
  double p_times_q = 0.25;

  static ClassPrior known(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("ClassPrior: p must lie in (0,1)");
    return ClassPrior{p, p * (1.0 - p)};
  }
};

namespace detail {
inline void check_binary(int y) {
  if (y != +1 && y != -1) throw LabelError("expected binary label -1/+1, got " + std::to_string(y));
}
}  // namespace detail

// Per-sample saddle objective:
//   F = (1-p)(h-a)^2 I[y=+1] + p (h-b)^2 I[y=-1]
//       + 2(1+alpha)(p h I[y=-1] - (1-p) h I[y=+1]) - p(1-p) alpha^2
inline double loss_F(const ModelArch& arch, const PrimalDualState& s, const ClassPrior& prior,
                     const Example& z) {
  detail::check_binary(z.y);
  const double h = forward(arch, s.w, z.x);
  const double p = prior.p;
  double f = -prior.p_times_q * s.alpha * s.alpha;
  if (z.y == +1) {
    f += (1.0 - p) * (h - s.a) * (h - s.a);
    f -= 2.0 * (1.0 + s.alpha) * (1.0 - p) * h;
  } else {
    f += p * (h - s.b) * (h - s.b);
    f += 2.0 * (1.0 + s.alpha) * p * h;
  }
  return f;
}

struct GradV {
  Vec grad_w;
  double grad_a = 0.0;
  double grad_b = 0.0;
};

// All four partial derivatives of F from a single backward pass.
struct SaddleGrads {
  Vec grad_w;
  double grad_a = 0.0;
  double grad_b = 0.0;
  double grad_alpha = 0.0;
  double h = 0.0;
};

inline SaddleGrads saddle_grads(const ModelArch& arch, const PrimalDualState& s,
                                const ClassPrior& prior, const Example& z) {
  detail::check_binary(z.y);
  const auto sg = forward_grad(arch, s.w, z.x);
  const double p = prior.p;
  SaddleGrads g;
  g.h = sg.h;
  double dh;  // dF/dh
  if (z.y == +1) {
    dh = 2.0 * (1.0 - p) * (sg.h - s.a) - 2.0 * (1.0 + s.alpha) * (1.0 - p);
    g.grad_a = -2.0 * (1.0 - p) * (sg.h - s.a);
    g.grad_alpha = -2.0 * (1.0 - p) * sg.h;
  } else {
    dh = 2.0 * p * (sg.h - s.b) + 2.0 * (1.0 + s.alpha) * p;
    g.grad_b = -2.0 * p * (sg.h - s.b);
    g.grad_alpha = 2.0 * p * sg.h;
  }
  g.grad_alpha -= 2.0 * prior.p_times_q * s.alpha;
  g.grad_w = sg.grad_w;
  scale(dh, g.grad_w);
  return g;
}

inline GradV grad_v(const ModelArch& arch, const PrimalDualState& s, const ClassPrior& prior,
                    const Example& z) {
  auto g = saddle_grads(arch, s, prior, z);
  return GradV{std::move(g.grad_w), g.grad_a, g.grad_b};
}

inline double grad_alpha(const ModelArch& arch, const PrimalDualState& s, const ClassPrior& prior,
                         const Example& z) {
  detail::check_binary(z.y);
  const double h = forward(arch, s.w, z.x);
  const double lin = (z.y == -1) ? 2.0 * prior.p * h : -2.0 * (1.0 - prior.p) * h;
  return lin - 2.0 * prior.p_times_q * s.alpha;
}

struct AbAlpha {
  double a_star = 0.0;
  double b_star = 0.0;
  double alpha_star = 0.0;
};

// Closed-form inner optima on a finite dataset: class-conditional score means,
// alpha* = b* - a*.
inline AbAlpha optimal_ab_alpha(const Model& m, const Dataset& d) {
  double sum_pos = 0.0, sum_neg = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& e : d.examples) {
    detail::check_binary(e.y);
    const double h = forward(m, e.x);
    if (e.y == +1) {
      sum_pos += h;
      ++n_pos;
    } else {
      sum_neg += h;
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0)
    throw ClassMissingError("optimal_ab_alpha: need at least one example per class");
  AbAlpha r;
  r.a_star = sum_pos / static_cast<double>(n_pos);
  r.b_star = sum_neg / static_cast<double>(n_neg);
  r.alpha_star = r.b_star - r.a_star;
  return r;
}

// Mean of (1 - h(x+) + h(x-))^2 over every positive-negative pair.
inline double pairwise_auc_loss(const Model& m, const Dataset& d) {
  std::vector<double> pos, neg;
  for (const auto& e : d.examples) {
    detail::check_binary(e.y);
    (e.y == +1 ? pos : neg).push_back(forward(m, e.x));
  }
  if (pos.empty() || neg.empty())
    throw ClassMissingError("pairwise_auc_loss: need at least one example per class");
  double sum = 0.0;
  for (double hp : pos)
    for (double hn : neg) {
      const double t = 1.0 - hp + hn;
      sum += t * t;
    }
  return sum / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

inline double mean_loss_F(const ModelArch& arch, const PrimalDualState& s, const ClassPrior& prior,
                          const Dataset& d) {
  if (d.empty()) throw EmptyInputError("mean_loss_F: empty dataset");
  double sum = 0.0;
  for (const auto& e : d.examples) sum += loss_F(arch, s, prior, e);
  return sum / static_cast<double>(d.size());
}

// Residual of the identity
//   pairwise_auc_loss = 1 + mean F(w, a*, b*, alpha*) / (p_hat (1 - p_hat))
// on the empirical measure, with p_hat the positive fraction. Holds exactly
// up to roundoff for any scorer.
inline double saddle_equivalence_check(const Model& m, const Dataset& d) {
  const std::size_t n_pos = d.count_label(+1);
  const std::size_t n_neg = d.count_label(-1);
  if (n_pos == 0 || n_neg == 0)
    throw ClassMissingError("saddle_equivalence_check: need both classes");
  const double p_hat = static_cast<double>(n_pos) / static_cast<double>(n_pos + n_neg);
  const ClassPrior prior = ClassPrior::known(p_hat);
  const AbAlpha opt = optimal_ab_alpha(m, d);
  PrimalDualState s{m.w, opt.a_star, opt.b_star, opt.alpha_star};
  const double lhs = pairwise_auc_loss(m, d);
  const double rhs = 1.0 + mean_loss_F(m.arch, s, prior, d) / prior.p_times_q;
  return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Multi-class extension: one scorer per class, pairwise matrices a, b, alpha.
// ---------------------------------------------------------------------------

struct MultiClassState {
  std::vector<Vec> w;       // c parameter vectors
  std::vector<double> a;    // c*c row-major, diagonal unused
  std::vector<double> b;
  std::vector<double> alpha;
  std::vector<double> priors;  // c entries, nonnegative, sum 1

  std::size_t num_classes() const { return w.size(); }

  double& a_at(std::size_t i, std::size_t j) { return a[i * num_classes() + j]; }
  double& b_at(std::size_t i, std::size_t j) { return b[i * num_classes() + j]; }
  double& alpha_at(std::size_t i, std::size_t j) { return alpha[i * num_classes() + j]; }
  double a_at(std::size_t i, std::size_t j) const { return a[i * num_classes() + j]; }
  double b_at(std::size_t i, std::size_t j) const { return b[i * num_classes() + j]; }
  double alpha_at(std::size_t i, std::size_t j) const { return alpha[i * num_classes() + j]; }

  static MultiClassState zeros(std::size_t c, std::size_t param_dim, std::vector<double> priors) {
    MultiClassState s;
    s.w.assign(c, Vec(param_dim, 0.0));
    s.a.assign(c * c, 0.0);
    s.b.assign(c * c, 0.0);
    s.alpha.assign(c * c, 0.0);
    s.priors = std::move(priors);
    return s;
  }
};

namespace detail {
inline void check_pair(const MultiClassState& s, std::size_t i, std::size_t j) {
  const std::size_t c = s.num_classes();
  if (i >= c || j >= c) throw ConfigError("multiclass: class index out of range");
  if (i == j) throw ConfigError("multiclass: class pair requires i != j");
}
}  // namespace detail

// Per-pair saddle term:
//   F_ij = p_j (h_i - a_ij)^2 I[y=i] + p_i (h_i - b_ij)^2 I[y=j]
//          + 2(1+alpha_ij)(p_i h_i I[y=j] - p_j h_i I[y=i]) - p_i p_j alpha_ij^2
inline double multiclass_loss_Fij(const ModelArch& arch, const MultiClassState& s, std::size_t i,
                                  std::size_t j, const Example& z) {
  detail::check_pair(s, i, j);
  const double pi = s.priors[i], pj = s.priors[j];
  const double aij = s.a_at(i, j), bij = s.b_at(i, j), alij = s.alpha_at(i, j);
  double f = -pi * pj * alij * alij;
  if (z.y == static_cast<int>(i) || z.y == static_cast<int>(j)) {
    const double h = forward(arch, s.w[i], z.x);
    if (z.y == static_cast<int>(i)) {
      f += pj * (h - aij) * (h - aij);
      f -= 2.0 * (1.0 + alij) * pj * h;
    } else {
      f += pi * (h - bij) * (h - bij);
      f += 2.0 * (1.0 + alij) * pi * h;
    }
  }
  return f;
}

struct MultiGrads {
  Vec grad_wi;
  double grad_a = 0.0;
  double grad_b = 0.0;
  double grad_alpha = 0.0;
};

inline MultiGrads multiclass_grads(const ModelArch& arch, const MultiClassState& s, std::size_t i,
                                   std::size_t j, const Example& z) {
  detail::check_pair(s, i, j);
  const double pi = s.priors[i], pj = s.priors[j];
  const double aij = s.a_at(i, j), bij = s.b_at(i, j), alij = s.alpha_at(i, j);
  MultiGrads g;
  g.grad_wi.assign(s.w[i].size(), 0.0);
  g.grad_alpha = -2.0 * pi * pj * alij;
  if (z.y == static_cast<int>(i) || z.y == static_cast<int>(j)) {
    const auto sg = forward_grad(arch, s.w[i], z.x);
    double dh;
    if (z.y == static_cast<int>(i)) {
      dh = 2.0 * pj * (sg.h - aij) - 2.0 * (1.0 + alij) * pj;
      g.grad_a = -2.0 * pj * (sg.h - aij);
      g.grad_alpha += -2.0 * pj * sg.h;
    } else {
      dh = 2.0 * pi * (sg.h - bij) + 2.0 * (1.0 + alij) * pi;
      g.grad_b = -2.0 * pi * (sg.h - bij);
      g.grad_alpha += 2.0 * pi * sg.h;
    }
    g.grad_wi = sg.grad_w;
    scale(dh, g.grad_wi);
  }
  return g;
}

// 1/(c(c-1)) sum over ordered pairs (i, j), i != j, of the probability that
// scorer i ranks class-i examples above class-j examples; ties count 0.5.
inline double multiclass_auc(const ModelArch& arch, const std::vector<Vec>& weights,
                             const Dataset& d, bool strict_ge = false) {
  const std::size_t c = weights.size();
  if (c < 2) throw ConfigError("multiclass_auc: need at least 2 classes");
  std::vector<std::vector<const Example*>> by_class(c);
  for (const auto& e : d.examples) {
    if (e.y < 0 || static_cast<std::size_t>(e.y) >= c)
      throw LabelError("multiclass_auc: label " + std::to_string(e.y) + " out of range");
    by_class[e.y].push_back(&e);
  }
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (i != j && (by_class[i].empty() || by_class[j].empty()))
        throw ClassMissingError("multiclass_auc: class pair (" + std::to_string(i) + "," +
                                std::to_string(j) + ") not represented");
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    // scorer i is shared by every pair (i, j), so score once per class
    std::vector<std::vector<double>> scores(c);
    for (std::size_t k = 0; k < c; ++k) {
      scores[k].reserve(by_class[k].size());
      for (const Example* e : by_class[k]) scores[k].push_back(forward(arch, weights[i], e->x));
    }
    for (std::size_t j = 0; j < c; ++j) {
      if (i == j) continue;
      total += auc_binary(scores[i], scores[j], strict_ge);
    }
  }
  return total / static_cast<double>(c * (c - 1));
}

// Optional normalization of the per-class scores; the pairwise objective and
// the AUC definition do not require it.
inline std::vector<double> softmax_scores(const ModelArch& arch, const std::vector<Vec>& weights,
                                          std::span<const double> x) {
  std::vector<double> s(weights.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    s[k] = forward(arch, weights[k], x);
    m = std::max(m, s[k]);
  }
  double z = 0.0;
  for (double& v : s) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : s) v /= z;
  return s;
}

}  // namespace aucpd
