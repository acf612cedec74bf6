#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "aucpd/data.hpp"
#include "aucpd/errors.hpp"
#include "aucpd/model.hpp"
#include "aucpd/numerics.hpp"

namespace aucpd {

// PL constant transferred from the pairwise objective (constant mu_prime) to
// the saddle objective:
//   mu = 1 / max( 1/(2 min(p,1-p)) + 2 Lt^2 / (mu' min(p^2,(1-p)^2)), 2/mu' ).
inline double mu_transfer(double mu_prime, double L_tilde, double p) {
  if (!(mu_prime > 0.0)) throw ConfigError("mu_transfer: mu_prime must be positive");
  if (!(L_tilde > 0.0)) throw ConfigError("mu_transfer: L_tilde must be positive");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("mu_transfer: p must lie in (0,1)");
  const double pmin = std::min(p, 1.0 - p);
  const double t1 = 1.0 / (2.0 * pmin) + 2.0 * L_tilde * L_tilde / (mu_prime * pmin * pmin);
  const double t2 = 2.0 / mu_prime;
  return 1.0 / std::max(t1, t2);
}

struct SymMatrix {
  std::size_t n = 0;
  Vec a;  // row-major n*n

  static SymMatrix zeros(std::size_t n) { return SymMatrix{n, Vec(n * n, 0.0)}; }
  static SymMatrix identity(std::size_t n) {
    SymMatrix m = zeros(n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

namespace detail {

inline double lambda_min(const SymMatrix& m) {
  double scale = 0.0;
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = 0; j < m.n; ++j) {
      scale = std::max(scale, std::abs(m.at(i, j)));
      if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-10 * std::max(1.0, scale))
        throw ConfigError("lambda_min: matrix is not symmetric");
    }
  Eigen::MatrixXd em(m.n, m.n);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = 0; j < m.n; ++j) em(i, j) = m.at(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(em, Eigen::EigenvaluesOnly);
  // PSD inputs: negative values can only be roundoff
  return std::max(0.0, es.eigenvalues()(0));
}

}  // namespace detail

// PL constant of the pairwise objective with a raw leaky-relu scorer:
//   mu = 2 min(c1^2, c2^2) [ lambda_min(E[xx^T|y=+1]) + lambda_min(E[xx^T|y=-1]) ].
inline double mu_one_hidden_layer(double c1, double c2, const SymMatrix& cov_pos,
                                  const SymMatrix& cov_neg) {
  if (cov_pos.n != cov_neg.n) throw ConfigError("mu_one_hidden_layer: dimension mismatch");
  const double m2 = std::min(c1 * c1, c2 * c2);
  return 2.0 * m2 * (detail::lambda_min(cov_pos) + detail::lambda_min(cov_neg));
}

// Class-conditional uncentered second moment E[x x^T | y = label].
inline SymMatrix class_second_moment(const Dataset& d, int label) {
  SymMatrix m = SymMatrix::zeros(d.dim);
  std::size_t n = 0;
  for (const auto& e : d.examples) {
    if (e.y != label) continue;
    ++n;
    for (std::size_t i = 0; i < d.dim; ++i)
      for (std::size_t j = 0; j < d.dim; ++j) m.at(i, j) += e.x[i] * e.x[j];
  }
  if (n == 0) throw ClassMissingError("class_second_moment: no examples with the given label");
  scale(1.0 / static_cast<double>(n), m.a);
  return m;
}

struct PlReport {
  double mu_claimed = 0.0;
  double worst_ratio = 0.0;  // max over probes of 2 mu (f - f*) / ||grad f||^2
  std::int64_t num_probes = 0;
  std::int64_t violations = 0;
  std::int64_t skipped = 0;  // probes where both gap and gradient vanish

  nlohmann::ordered_json to_json() const {
    return {{"mu_claimed", mu_claimed},
            {"worst_ratio", worst_ratio},
            {"num_probes", num_probes},
            {"violations", violations},
            {"skipped", skipped}};
  }
};

// Evaluates the PL inequality mu (f - f*) <= 1/2 ||grad f||^2 pointwise.
// A probe with a vanishing gradient but a large gap is a genuine failure
// witness and counts as a violation; probes where both vanish are vacuous and
// skipped. f_star must come from an independent minimization oracle.
inline PlReport audit_pl(const std::function<double(const Vec&)>& f,
                         const std::function<Vec(const Vec&)>& grad_f,
                         const std::vector<Vec>& probes, double f_star, double mu, double tol) {
  if (!(mu > 0.0)) throw ConfigError("audit_pl: mu must be positive");
  if (probes.empty()) throw EmptyInputError("audit_pl: no probes");
  double min_probe_f = std::numeric_limits<double>::infinity();
  PlReport rep;
  rep.mu_claimed = mu;
  for (const auto& w : probes) {
    const double fv = f(w);
    min_probe_f = std::min(min_probe_f, fv);
    const double gap = fv - f_star;
    const double gn2 = squared_norm(grad_f(w));
    if (gn2 < 1e-20 && gap < 1e-10) {
      ++rep.skipped;
      continue;
    }
    ++rep.num_probes;
    double ratio;
    if (gn2 < 1e-20) {
      ratio = std::numeric_limits<double>::infinity();  // flat point far from optimum
    } else {
      ratio = 2.0 * mu * gap / gn2;
    }
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio > 1.0 + tol) ++rep.violations;
  }
  if (f_star > min_probe_f + tol)
    throw ConfigError("audit_pl: f_star exceeds the best probe value; oracle is inconsistent");
  return rep;
}

// ---------------------------------------------------------------------------
// Pairwise squared loss with a raw leaky-relu scorer, in the factored O(n)
// form. The n_pos * n_neg double sum collapses to class-conditional moments:
//   f = mean+[(1-s)^2] + 2 mean+[1-s] mean-[s] + mean-[s^2].
// ---------------------------------------------------------------------------
class PairwiseLeakyObjective {
 public:
  PairwiseLeakyObjective(const Dataset& d, double c1, double c2) : c1_(c1), c2_(c2) {
    for (const auto& e : d.examples) {
      detail_check(e.y);
      (e.y == +1 ? pos_ : neg_).push_back(&e);
    }
    if (pos_.empty() || neg_.empty())
      throw ClassMissingError("PairwiseLeakyObjective: need both classes");
    dim_ = d.dim;
  }

  std::size_t dim() const { return dim_; }

  double value(const Vec& w) const {
    double mp = 0.0, mp2 = 0.0;  // mean of (1-s), mean of (1-s)^2 over positives
    for (const Example* e : pos_) {
      const double t = 1.0 - act(dot(w, e->x));
      mp += t;
      mp2 += t * t;
    }
    mp /= static_cast<double>(pos_.size());
    mp2 /= static_cast<double>(pos_.size());
    double mn = 0.0, mn2 = 0.0;  // mean of s, s^2 over negatives
    for (const Example* e : neg_) {
      const double s = act(dot(w, e->x));
      mn += s;
      mn2 += s * s;
    }
    mn /= static_cast<double>(neg_.size());
    mn2 /= static_cast<double>(neg_.size());
    return mp2 + 2.0 * mp * mn + mn2;
  }

  Vec gradient(const Vec& w) const {
    const double P = static_cast<double>(pos_.size());
    const double N = static_cast<double>(neg_.size());
    double sum_pos = 0.0, sum_neg = 0.0;
    std::vector<double> s_pos(pos_.size()), s_neg(neg_.size());
    for (std::size_t i = 0; i < pos_.size(); ++i) {
      s_pos[i] = act(dot(w, pos_[i]->x));
      sum_pos += s_pos[i];
    }
    for (std::size_t j = 0; j < neg_.size(); ++j) {
      s_neg[j] = act(dot(w, neg_[j]->x));
      sum_neg += s_neg[j];
    }
    Vec g(dim_, 0.0);
    for (std::size_t i = 0; i < pos_.size(); ++i) {
      // sum over negatives of (1 - s_i + s_j) = N(1 - s_i) + sum_neg
      const double coeff = -slope(dot(w, pos_[i]->x)) * (N * (1.0 - s_pos[i]) + sum_neg);
      axpy(coeff, pos_[i]->x, g);
    }
    for (std::size_t j = 0; j < neg_.size(); ++j) {
      const double coeff = slope(dot(w, neg_[j]->x)) * (P * (1.0 + s_neg[j]) - sum_pos);
      axpy(coeff, neg_[j]->x, g);
    }
    scale(2.0 / (P * N), g);
    return g;
  }

 private:
  static void detail_check(int y) {
    if (y != +1 && y != -1) throw LabelError("PairwiseLeakyObjective: binary labels required");
  }
  double act(double z) const { return z > 0.0 ? c1_ * z : c2_ * z; }
  double slope(double z) const { return z > 0.0 ? c1_ : c2_; }

  std::vector<const Example*> pos_, neg_;
  double c1_, c2_;
  std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// Full-batch gradient descent with Armijo backtracking; the multistart
// wrapper is the f* oracle for the PL audit.
// ---------------------------------------------------------------------------
struct GdResult {
  Vec x;
  double f = 0.0;
  double grad_norm = 0.0;
  std::int64_t iterations = 0;
};

inline GdResult gradient_descent(const std::function<double(const Vec&)>& f,
                                 const std::function<Vec(const Vec&)>& grad_f, Vec x0,
                                 std::int64_t max_iters = 100000, double grad_tol = 1e-10) {
  GdResult r;
  r.x = std::move(x0);
  r.f = f(r.x);
  double step = 1.0;
  for (std::int64_t it = 0; it < max_iters; ++it) {
    const Vec g = grad_f(r.x);
    const double gn2 = squared_norm(g);
    r.grad_norm = std::sqrt(gn2);
    r.iterations = it;
    if (r.grad_norm <= grad_tol) return r;
    bool accepted = false;
    for (double s = step; s > 1e-18; s *= 0.5) {
      Vec xn = r.x;
      axpy(-s, g, xn);
      const double fn = f(xn);
      if (fn <= r.f - 1e-4 * s * gn2) {
        r.x = std::move(xn);
        r.f = fn;
        step = 2.0 * s;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no descent direction at float resolution
  }
  r.grad_norm = norm2(grad_f(r.x));
  return r;
}

inline double f_star_multistart(const std::function<double(const Vec&)>& f,
                                const std::function<Vec(const Vec&)>& grad_f, std::size_t dim,
                                int restarts, double radius, Rng& rng,
                                std::int64_t max_iters = 100000, double grad_tol = 1e-10) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Vec x0(dim);
    for (auto& v : x0) v = radius * rng.normal();
    const GdResult res = gradient_descent(f, grad_f, std::move(x0), max_iters, grad_tol);
    best = std::min(best, res.f);
  }
  return best;
}

// Probes drawn uniformly from the ball of the given radius.
inline std::vector<Vec> ball_probes(std::size_t dim, std::size_t count, double radius, Rng& rng) {
  std::vector<Vec> probes(count, Vec(dim));
  for (auto& w : probes) {
    double n2 = 0.0;
    for (auto& v : w) {
      v = rng.normal();
      n2 += v * v;
    }
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    const double f = r / std::max(1e-300, std::sqrt(n2));
    for (auto& v : w) v *= f;
  }
  return probes;
}

}  // namespace aucpd
