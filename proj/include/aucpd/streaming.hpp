#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>

#include <json.hpp>

#include "aucpd/errors.hpp"
#include "aucpd/objective.hpp"

namespace aucpd {

// Online estimators of p and p(1-p) from a label stream. The recurrences are
//   p_hat  = T+ / (T+ + T-)
//   y_bar  <- ((j+2) y_bar + sum I[y=1]) / (j+m+2)
//   pq_hat <- ((j+1) pq_hat + sum (I[y=1] - y_bar)^2) / (j+m+1)
// applied in that order per batch of size m, starting from all-zero state.
// pq_hat is clamped only at snapshot time; the stored value stays raw.
struct PriorTracker {
  static constexpr double kPqEpsilon = 1e-6;

  std::int64_t t_plus = 0;
  std::int64_t t_minus = 0;
  double p_hat = 0.0;
  double y_bar = 0.0;
  double pq_hat = 0.0;
  std::int64_t j = 0;

  void update(std::span<const int> labels) {
    const std::int64_t m = static_cast<std::int64_t>(labels.size());
    if (m == 0) return;
    std::int64_t plus = 0;
    for (int y : labels) {
      if (y != +1 && y != -1)
        throw LabelError("PriorTracker: expected binary label, got " + std::to_string(y));
      plus += (y == +1);
    }
    t_plus += plus;
    t_minus += m - plus;
    p_hat = static_cast<double>(t_plus) / static_cast<double>(t_plus + t_minus);
    y_bar = (static_cast<double>(j + 2) * y_bar + static_cast<double>(plus)) /
            static_cast<double>(j + m + 2);
    double sq = 0.0;
    for (int y : labels) {
      const double d = (y == +1 ? 1.0 : 0.0) - y_bar;
      sq += d * d;
    }
    pq_hat = (static_cast<double>(j + 1) * pq_hat + sq) / static_cast<double>(j + m + 1);
    j += m;
  }

  void update_one(int label) { update(std::span<const int>(&label, 1)); }

  bool ready() const { return t_plus > 0 && t_minus > 0; }

  // Immutable plug-in prior: p_hat plus pq_hat clamped into (0, 0.25].
  ClassPrior snapshot() const {
    if (!ready())
      throw NotReadyError("PriorTracker: need at least one label of each class before snapshot");
    ClassPrior prior;
    prior.p = p_hat;
    prior.p_times_q = std::clamp(pq_hat, kPqEpsilon, 0.25);
    return prior;
  }

  bool snapshot_clamps() const { return ready() && (pq_hat < kPqEpsilon || pq_hat > 0.25); }

  nlohmann::ordered_json to_json() const {
    return {{"t_plus", t_plus}, {"t_minus", t_minus}, {"p_hat", p_hat},
            {"y_bar", y_bar},   {"pq_hat", pq_hat},   {"j", j}};
  }

  static PriorTracker from_json(const nlohmann::json& js) {
    PriorTracker t;
    t.t_plus = js.at("t_plus").get<std::int64_t>();
    t.t_minus = js.at("t_minus").get<std::int64_t>();
    t.p_hat = js.at("p_hat").get<double>();
    t.y_bar = js.at("y_bar").get<double>();
    t.pq_hat = js.at("pq_hat").get<double>();
    t.j = js.at("j").get<std::int64_t>();
    return t;
  }
};

}  // namespace aucpd
