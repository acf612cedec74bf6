#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "aucpd/numerics.hpp"
#include "aucpd/streaming.hpp"

using namespace aucpd;

namespace {

// From-scratch recomputation over the full batch history; used to pin the
// incremental state against drift.
struct Replay {
  double p_hat = 0, y_bar = 0, pq_hat = 0;
  std::int64_t tp = 0, tm = 0, j = 0;
  void feed(const std::vector<int>& batch) {
    const std::int64_t m = static_cast<std::int64_t>(batch.size());
    std::int64_t plus = 0;
    for (int y : batch) plus += (y == +1);
    tp += plus;
    tm += m - plus;
    p_hat = double(tp) / double(tp + tm);
    y_bar = (double(j + 2) * y_bar + double(plus)) / double(j + m + 2);
    double sq = 0;
    for (int y : batch) {
      const double d = (y == +1 ? 1.0 : 0.0) - y_bar;
      sq += d * d;
    }
    pq_hat = (double(j + 1) * pq_hat + sq) / double(j + m + 1);
    j += m;
  }
};

}  // namespace

TEST_CASE("tracker: counter definitions") {
  PriorTracker t;
  t.update_one(+1);
  CHECK(t.t_plus == 1);
  CHECK(t.t_minus == 0);
  CHECK(t.p_hat == 1.0);

  PriorTracker t2;
  const std::vector<int> batch{+1, -1, +1, -1};
  t2.update(batch);
  CHECK(t2.p_hat == 0.5);
  CHECK(t2.j == 4);

  CHECK_THROWS_AS(t2.update_one(0), LabelError);
}

TEST_CASE("tracker: p_hat is the exact positive fraction") {
  Rng rng(1);
  PriorTracker t;
  std::int64_t plus = 0, total = 0;
  for (int i = 0; i < 500; ++i) {
    const int y = rng.uniform() < 0.37 ? +1 : -1;
    plus += (y == +1);
    ++total;
    t.update_one(y);
    REQUIRE(t.p_hat == static_cast<double>(plus) / static_cast<double>(total));
  }
}

TEST_CASE("tracker: incremental state equals from-scratch recomputation") {
  Rng rng(77);
  PriorTracker t;
  std::vector<std::vector<int>> history;
  std::int64_t fed = 0;
  while (fed < 1000) {
    const std::size_t m = 1 + rng.uniform_index(7);
    std::vector<int> batch(m);
    for (auto& y : batch) y = rng.uniform() < 0.3 ? +1 : -1;
    t.update(batch);
    history.push_back(batch);
    fed += m;

    Replay r;
    for (const auto& b : history) r.feed(b);
    REQUIRE(std::abs(t.p_hat - r.p_hat) <= 1e-12);
    REQUIRE(std::abs(t.y_bar - r.y_bar) <= 1e-12);
    REQUIRE(std::abs(t.pq_hat - r.pq_hat) <= 1e-12);
    REQUIRE(t.j == r.j);
  }
}

TEST_CASE("tracker: estimates concentrate near p and p(1-p)") {
  // scaled-down version of the acceptance run
  const int trackers = 50;
  const int n = 20000;
  double sum_p = 0, sum_pq = 0, sumsq_p = 0, sumsq_pq = 0;
  for (int t = 0; t < trackers; ++t) {
    Rng rng(500 + t);
    PriorTracker tr;
    for (int i = 0; i < n; ++i) tr.update_one(rng.uniform() < 0.3 ? +1 : -1);
    sum_p += tr.p_hat;
    sum_pq += tr.pq_hat;
    sumsq_p += tr.p_hat * tr.p_hat;
    sumsq_pq += tr.pq_hat * tr.pq_hat;
  }
  const double mp = sum_p / trackers, mpq = sum_pq / trackers;
  const double se_p = std::sqrt((sumsq_p / trackers - mp * mp) / trackers);
  const double se_pq = std::sqrt((sumsq_pq / trackers - mpq * mpq) / trackers);
  CHECK(std::abs(mp - 0.3) <= 3.0 * se_p + 1e-4);
  CHECK(std::abs(mpq - 0.21) <= 3.0 * se_pq + 1e-4);
}

TEST_CASE("tracker: snapshot semantics") {
  PriorTracker t;
  CHECK_THROWS_AS(t.snapshot(), NotReadyError);
  t.update_one(+1);
  CHECK_THROWS_AS(t.snapshot(), NotReadyError);
  t.update_one(-1);
  const ClassPrior p = t.snapshot();
  CHECK(p.p == 0.5);

  // snapshots are values: later updates do not touch them
  t.update(std::vector<int>{+1, +1, +1});
  CHECK(p.p == 0.5);

  // clamp rule on a degenerate raw value
  PriorTracker degenerate;
  degenerate.t_plus = degenerate.t_minus = 1;
  degenerate.pq_hat = 0.0;
  CHECK(degenerate.snapshot().p_times_q == PriorTracker::kPqEpsilon);
  degenerate.pq_hat = 0.3;
  CHECK(degenerate.snapshot().p_times_q == 0.25);
}

TEST_CASE("tracker: json round-trip is lossless") {
  Rng rng(12);
  PriorTracker t;
  for (int i = 0; i < 333; ++i) t.update_one(rng.uniform() < 0.6 ? +1 : -1);
  const PriorTracker back = PriorTracker::from_json(t.to_json());
  CHECK(back.t_plus == t.t_plus);
  CHECK(back.t_minus == t.t_minus);
  CHECK(back.p_hat == t.p_hat);
  CHECK(back.y_bar == t.y_bar);
  CHECK(back.pq_hat == t.pq_hat);
  CHECK(back.j == t.j);
}
