#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "aucpd/errors.hpp"

namespace aucpd {

enum class ScheduleMode { theoretical, practical };

inline std::string to_string(ScheduleMode m) {
  return m == ScheduleMode::theoretical ? "theoretical" : "practical";
}

inline ScheduleMode schedule_mode_from_string(const std::string& s) {
  if (s == "theoretical") return ScheduleMode::theoretical;
  if (s == "practical") return ScheduleMode::practical;
  throw ConfigError("unknown schedule mode '" + s + "'");
}

// Constants driving the stage schedules. Theoretical mode consumes the
// problem constants (mu, L, L_tilde, G, sigma2, p); practical mode only needs
// (eta0, T0, m0, K). dim_w is the primal parameter count, used by the
// adagrad stage constants.
struct ScheduleParams {
  double mu = 0.0;
  double L = 0.0;
  double L_tilde = 0.0;
  double G = 0.0;
  double sigma2 = 0.0;
  double delta = 0.0;   // adagrad regularizer; <= 0 means calibrate at run time
  double gamma = 0.0;   // proximal weight; <= 0 means default (1/(2L) in theoretical mode)
  double eta0 = 0.1;
  std::int64_t T0 = 200;
  std::int64_t m0 = 32;
  int K = 5;
  ScheduleMode mode = ScheduleMode::practical;
  double p = 0.5;
  std::size_t dim_w = 0;

  double decay_rate() const { return (mu / L) / (5.0 + mu / L); }

  double resolved_gamma() const {
    if (gamma > 0.0) return gamma;
    if (mode == ScheduleMode::theoretical && L > 0.0) return 1.0 / (2.0 * L);
    throw ConfigError("schedule: gamma must be set in practical mode");
  }

  void validate() const {
    if (!(eta0 > 0.0)) throw ConfigError("schedule: eta0 must be positive");
    if (T0 < 1) throw ConfigError("schedule: T0 must be >= 1");
    if (m0 < 1) throw ConfigError("schedule: m0 must be >= 1");
    if (K < 1) throw ConfigError("schedule: K must be >= 1");
    if (mode == ScheduleMode::theoretical) {
      if (!(mu > 0.0)) throw ConfigError("schedule: mu must be positive in theoretical mode");
      if (!(L > 0.0)) throw ConfigError("schedule: L must be positive in theoretical mode");
      if (!(L_tilde > 0.0))
        throw ConfigError("schedule: L_tilde must be positive in theoretical mode");
      if (!(G > 0.0)) throw ConfigError("schedule: G must be positive in theoretical mode");
      if (!(sigma2 > 0.0))
        throw ConfigError("schedule: sigma2 must be positive in theoretical mode");
      if (!(p > 0.0 && p < 1.0)) throw ConfigError("schedule: p must lie in (0,1)");
      const double g = resolved_gamma();
      if (g > 1.0 / L + 1e-12)
        throw ConfigError("schedule: gamma must satisfy gamma <= 1/L in theoretical mode");
    }
  }
};

// Per-stage plan. T_k and m_k are rounded up; the _exact fields keep the
// closed-form reals (the product eta_k * T_k_exact is stage-invariant).
struct StagePlan {
  int k = 1;
  double eta_k = 0.0;
  std::int64_t T_k = 1;
  std::int64_t m_k = 1;
  double M_k = 0.0;  // adagrad stopping-time multiplier; 0 when unused
  double T_k_exact = 0.0;
  double m_k_exact = 0.0;
};

// C = 2/ln(1/q) * q^{1/ln(1/q)} with q = max(p, 1-p); algebraically equal to
// 2/(e ln(1/q)).
inline double constant_C(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("constant_C: p must lie in (0,1)");
  const double q = std::max(p, 1.0 - p);
  const double log_inv = std::log(1.0 / q);
  return 2.0 / log_inv * std::pow(q, 1.0 / log_inv);
}

namespace detail {
inline std::int64_t ceil_count(double x) {
  const double c = std::ceil(x);
  if (!(c >= 1.0)) return 1;
  if (c > 9.0e18) throw ConfigError("schedule: stage count overflows");
  return static_cast<std::int64_t>(c);
}
}  // namespace detail

// Geometric schedule: eta_k = eta0 exp(-(k-1) r), eta_k T_k = max(2,16Lt^2)/L,
// m_k = 2(sigma^2+C) L exp(k r) / (p(1-p) G^2 eta0 max(2,16Lt^2)), with
// r = (mu/L)/(5 + mu/L).
inline StagePlan schedule_theoretical(const ScheduleParams& sp, int k) {
  sp.validate();
  if (sp.mode != ScheduleMode::theoretical)
    throw ConfigError("schedule_theoretical: params are in practical mode");
  if (k < 1) throw ConfigError("schedule: stage index k must be >= 1");
  const double r = sp.decay_rate();
  const double cap = std::max(2.0, 16.0 * sp.L_tilde * sp.L_tilde);
  StagePlan plan;
  plan.k = k;
  plan.eta_k = sp.eta0 * std::exp(-(k - 1) * r);
  plan.T_k_exact = cap / (sp.L * sp.eta0) * std::exp((k - 1) * r);
  plan.m_k_exact = 2.0 * (sp.sigma2 + constant_C(sp.p)) * sp.L /
                   (sp.p * (1.0 - sp.p) * sp.G * sp.G * sp.eta0 * cap) * std::exp(k * r);
  plan.T_k = detail::ceil_count(plan.T_k_exact);
  plan.m_k = detail::ceil_count(plan.m_k_exact);
  return plan;
}

// Adagrad variant: half-rate step decay, stopping-time multiplier
// M_k = 4c/(L eta0) exp((k-1)/2 r) with c = 1/sqrt(d+3), and
// m_k = 2(sigma^2+C) exp(k r) / (p(1-p) eta0^2 (d+3)).
inline StagePlan schedule_theoretical_adagrad(const ScheduleParams& sp, int k) {
  sp.validate();
  if (sp.mode != ScheduleMode::theoretical)
    throw ConfigError("schedule_theoretical_adagrad: params are in practical mode");
  if (k < 1) throw ConfigError("schedule: stage index k must be >= 1");
  if (sp.dim_w == 0) throw ConfigError("schedule: dim_w required for the adagrad schedule");
  const double r = sp.decay_rate();
  const double dp3 = static_cast<double>(sp.dim_w) + 3.0;
  const double c = 1.0 / std::sqrt(dp3);
  StagePlan plan;
  plan.k = k;
  plan.eta_k = sp.eta0 * std::exp(-0.5 * (k - 1) * r);
  plan.M_k = 4.0 * c / (sp.L * sp.eta0) * std::exp(0.5 * (k - 1) * r);
  plan.m_k_exact = 2.0 * (sp.sigma2 + constant_C(sp.p)) /
                   (sp.p * (1.0 - sp.p) * sp.eta0 * sp.eta0 * dp3) * std::exp(k * r);
  plan.m_k = detail::ceil_count(plan.m_k_exact);
  plan.T_k = 0;  // determined by the stopping time at run time
  plan.T_k_exact = 0.0;
  return plan;
}

// eta_k = eta0 / 3^(k-1), T_k = T0 3^(k-1), m_k = m0 3^(k-1).
inline StagePlan schedule_practical(const ScheduleParams& sp, int k) {
  sp.validate();
  if (k < 1) throw ConfigError("schedule: stage index k must be >= 1");
  double factor = 1.0;
  for (int i = 1; i < k; ++i) factor *= 3.0;
  StagePlan plan;
  plan.k = k;
  plan.eta_k = sp.eta0 / factor;
  plan.T_k_exact = static_cast<double>(sp.T0) * factor;
  plan.m_k_exact = static_cast<double>(sp.m0) * factor;
  plan.T_k = detail::ceil_count(plan.T_k_exact);
  plan.m_k = detail::ceil_count(plan.m_k_exact);
  return plan;
}

}  // namespace aucpd
