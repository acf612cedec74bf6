#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "aucpd/errors.hpp"

namespace aucpd {

struct MetricSnapshot {
  double auc = 0.0;
  double pairwise_loss = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::int64_t step = 0;
};

// Mann-Whitney AUC in O(n log n): (#{s+ > s-} + 0.5 #ties) / (n+ n-).
// strict_ge counts ties fully (the s+ >= s- convention) instead of 0.5.
inline double auc_binary(const std::vector<double>& scores_pos,
                         const std::vector<double>& scores_neg, bool strict_ge = false) {
  if (scores_pos.empty() || scores_neg.empty())
    throw ClassMissingError("auc_binary: need at least one score per class");
  // (score, is_positive) sorted by score; sweep equal-value groups.
  std::vector<std::pair<double, bool>> all;
  all.reserve(scores_pos.size() + scores_neg.size());
  for (double s : scores_pos) all.emplace_back(s, true);
  for (double s : scores_neg) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double wins = 0.0;
  std::size_t neg_below = 0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    std::size_t pos_in_group = 0, neg_in_group = 0;
    while (j < all.size() && all[j].first == all[i].first) {
      if (all[j].second)
        ++pos_in_group;
      else
        ++neg_in_group;
      ++j;
    }
    const double tie_credit = strict_ge ? 1.0 : 0.5;
    wins += static_cast<double>(pos_in_group) *
            (static_cast<double>(neg_below) + tie_credit * static_cast<double>(neg_in_group));
    neg_below += neg_in_group;
    i = j;
  }
  return wins / (static_cast<double>(scores_pos.size()) * static_cast<double>(scores_neg.size()));
}

}  // namespace aucpd
