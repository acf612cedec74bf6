#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aucpd/objective.hpp"

using namespace aucpd;

namespace {

// Raw scorer on 1-d inputs: h(w; [x]) = w*x for positive pre-activation, so
// exact score values are easy to stage.
const ModelArch kRaw1{ModelKind::leaky_relu_raw, 1, 16, 1.0, 0.1};

Example ex(double x, int y) { return Example{Vec{x}, y}; }

Dataset random_dataset(std::size_t n, std::size_t dim, Rng& rng) {
  Dataset d;
  d.dim = dim;
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    Example e;
    e.y = rng.uniform() < 0.5 ? +1 : -1;
    if (i == 0) e.y = +1;
    if (i == 1) e.y = -1;
    has_pos |= e.y > 0;
    has_neg |= e.y < 0;
    e.x.resize(dim);
    for (auto& v : e.x) v = rng.normal();
    d.examples.push_back(std::move(e));
  }
  (void)has_pos;
  (void)has_neg;
  return d;
}

Model random_model(const ModelArch& arch, Rng& rng) {
  Model m;
  m.arch = arch;
  m.w.resize(arch.param_count());
  for (auto& v : m.w) v = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("loss_F: hand cases") {
  // h = 0, a = b = alpha = 0: every term vanishes
  PrimalDualState s{Vec{1.0}, 0, 0, 0};
  const ClassPrior half = ClassPrior::known(0.5);
  CHECK(loss_F(kRaw1, s, half, ex(0.0, +1)) == 0.0);
  CHECK(loss_F(kRaw1, s, half, ex(0.0, -1)) == 0.0);

  // p = 0.5, y = +1, h = 1, a = b = alpha = 0  ->  0.5 - 1 = -0.5
  CHECK(loss_F(kRaw1, s, half, ex(1.0, +1)) == -0.5);

  CHECK_THROWS_AS(loss_F(kRaw1, s, half, ex(1.0, 3)), LabelError);
}

TEST_CASE("grad_v: indicator structure and exact zeros") {
  const ClassPrior pr = ClassPrior::known(0.3);
  PrimalDualState s{Vec{0.7}, 0.2, -0.1, 0.4};
  const GradV gp = grad_v(kRaw1, s, pr, ex(1.3, +1));
  CHECK(gp.grad_b == 0.0);
  const GradV gn = grad_v(kRaw1, s, pr, ex(1.3, -1));
  CHECK(gn.grad_a == 0.0);

  // h = a, y = +1, alpha = -1: both bracket terms vanish
  PrimalDualState s2{Vec{0.5}, 0.5 * 2.0, 0.0, -1.0};
  const GradV gz = grad_v(kRaw1, s2, pr, ex(2.0, +1));
  for (double v : gz.grad_w) CHECK(v == 0.0);
}

TEST_CASE("grad_alpha: hand cases") {
  const ClassPrior half = ClassPrior::known(0.5);
  PrimalDualState s{Vec{1.0}, 0, 0, 0};
  CHECK(grad_alpha(kRaw1, s, half, ex(0.0, +1)) == 0.0);
  CHECK(grad_alpha(kRaw1, s, half, ex(1.0, -1)) == 1.0);
}

TEST_CASE("all objective gradients match finite differences") {
  Rng rng(808);
  const ModelArch lin{ModelKind::linear_sigmoid, 3};
  const ClassPrior pr = ClassPrior::known(0.35);
  for (int trial = 0; trial < 100; ++trial) {
    PrimalDualState s;
    s.w.resize(3);
    for (auto& v : s.w) v = rng.normal();
    s.a = rng.normal();
    s.b = rng.normal();
    s.alpha = rng.normal();
    Example z;
    z.x = {rng.normal(), rng.normal(), rng.normal()};
    z.y = rng.uniform() < 0.5 ? +1 : -1;

    const GradV g = grad_v(lin, s, pr, z);
    const auto f_w = [&](const Vec& w) {
      PrimalDualState t = s;
      t.w = w;
      return loss_F(lin, t, pr, z);
    };
    const Vec fd_w = finite_diff_grad(f_w, s.w, 1e-5);
    for (std::size_t i = 0; i < 3; ++i)
      REQUIRE(std::abs(fd_w[i] - g.grad_w[i]) / (1.0 + std::abs(g.grad_w[i])) <= 1e-4);

    const auto f_ab = [&](const Vec& ab) {
      PrimalDualState t = s;
      t.a = ab[0];
      t.b = ab[1];
      return loss_F(lin, t, pr, z);
    };
    const Vec fd_ab = finite_diff_grad(f_ab, Vec{s.a, s.b}, 1e-5);
    REQUIRE(std::abs(fd_ab[0] - g.grad_a) / (1.0 + std::abs(g.grad_a)) <= 1e-4);
    REQUIRE(std::abs(fd_ab[1] - g.grad_b) / (1.0 + std::abs(g.grad_b)) <= 1e-4);

    const double ga = grad_alpha(lin, s, pr, z);
    const auto f_al = [&](const Vec& al) {
      PrimalDualState t = s;
      t.alpha = al[0];
      return loss_F(lin, t, pr, z);
    };
    const Vec fd_al = finite_diff_grad(f_al, Vec{s.alpha}, 1e-5);
    REQUIRE(std::abs(fd_al[0] - ga) / (1.0 + std::abs(ga)) <= 1e-6);
  }
}

TEST_CASE("optimal_ab_alpha: constant and separated scorers") {
  Dataset d;
  d.dim = 1;
  d.examples = {ex(1.0, +1), ex(1.0, -1), ex(1.0, +1)};
  Model constant{ModelArch{ModelKind::leaky_relu_raw, 1, 16, 0.3, 0.3}, Vec{1.0}};
  const AbAlpha c = optimal_ab_alpha(constant, d);
  CHECK(c.a_star == Catch::Approx(0.3).margin(1e-15));
  CHECK(c.b_star == Catch::Approx(0.3).margin(1e-15));
  CHECK(c.alpha_star == Catch::Approx(0.0).margin(1e-15));

  Dataset sep;
  sep.dim = 1;
  sep.examples = {ex(1.0, +1), ex(0.0, -1)};
  Model ramp{kRaw1, Vec{1.0}};
  const AbAlpha r = optimal_ab_alpha(ramp, sep);
  CHECK(r.a_star == 1.0);
  CHECK(r.b_star == 0.0);
  CHECK(r.alpha_star == -1.0);

  Dataset onesided;
  onesided.dim = 1;
  onesided.examples = {ex(1.0, +1)};
  CHECK_THROWS_AS(optimal_ab_alpha(ramp, onesided), ClassMissingError);
}

TEST_CASE("optimal_ab_alpha attains the saddle on a grid") {
  Rng rng(5150);
  const ModelArch lin{ModelKind::linear_sigmoid, 2};
  const Model m = random_model(lin, rng);
  const Dataset d = random_dataset(40, 2, rng);
  const double p_hat = static_cast<double>(d.count_label(+1)) / static_cast<double>(d.size());
  const ClassPrior pr = ClassPrior::known(p_hat);
  const AbAlpha opt = optimal_ab_alpha(m, d);
  const auto mean_f = [&](double a, double b, double alpha) {
    return mean_loss_F(lin, PrimalDualState{m.w, a, b, alpha}, pr, d);
  };
  const double at_opt = mean_f(opt.a_star, opt.b_star, opt.alpha_star);
  for (int i = 0; i < 50; ++i) {
    const double t = -1.0 + 2.0 * i / 49.0;  // lattice over [-1, 1]
    REQUIRE(mean_f(opt.a_star + t, opt.b_star, opt.alpha_star) >= at_opt - 1e-12);
    REQUIRE(mean_f(opt.a_star, opt.b_star + t, opt.alpha_star) >= at_opt - 1e-12);
    REQUIRE(mean_f(opt.a_star, opt.b_star, opt.alpha_star + t) <= at_opt + 1e-12);
  }
}

TEST_CASE("pairwise_auc_loss: perfect and constant scorers") {
  Dataset sep;
  sep.dim = 1;
  sep.examples = {ex(1.0, +1), ex(0.0, -1), ex(1.0, +1)};
  Model ramp{kRaw1, Vec{1.0}};
  CHECK(pairwise_auc_loss(ramp, sep) == 0.0);

  Model constant{ModelArch{ModelKind::leaky_relu_raw, 1, 16, 0.4, 0.4}, Vec{1.0}};
  Dataset ones;
  ones.dim = 1;
  ones.examples = {ex(1.0, +1), ex(1.0, -1)};
  CHECK(pairwise_auc_loss(constant, ones) == 1.0);
}

TEST_CASE("saddle equivalence holds to 1e-9 on random instances") {
  Rng rng(2718);
  const ModelArch kinds[3] = {{ModelKind::linear_sigmoid, 3},
                              {ModelKind::leaky_relu_raw, 3, 16, 1.0, 0.1},
                              {ModelKind::mlp_sigmoid, 3, 4, 1.0, 0.01}};
  for (int trial = 0; trial < 30; ++trial) {
    const ModelArch& arch = kinds[trial % 3];
    const Model m = random_model(arch, rng);
    const Dataset d = random_dataset(4 + rng.uniform_index(60), 3, rng);
    REQUIRE(saddle_equivalence_check(m, d) <= 1e-9);
  }

  // two-point dataset: both sides vanish for a perfect scorer
  Dataset two;
  two.dim = 1;
  two.examples = {ex(1.0, +1), ex(0.0, -1)};
  Model ramp{kRaw1, Vec{1.0}};
  CHECK(saddle_equivalence_check(ramp, two) <= 1e-12);
}

TEST_CASE("alpha slice is concave quadratic, (a,b) slice convex") {
  Rng rng(62);
  const ModelArch lin{ModelKind::linear_sigmoid, 2};
  const Model m = random_model(lin, rng);
  const Dataset d = random_dataset(30, 2, rng);
  const ClassPrior pr = ClassPrior::known(0.4);
  const auto f_alpha = [&](double alpha) {
    return mean_loss_F(lin, PrimalDualState{m.w, 0.1, -0.2, alpha}, pr, d);
  };
  // three-point second difference of a quadratic recovers 2 * leading coeff
  const double d2 = (f_alpha(1.0) - 2.0 * f_alpha(0.0) + f_alpha(-1.0));
  CHECK(d2 == Catch::Approx(-2.0 * pr.p_times_q).epsilon(1e-9));

  const auto f_a = [&](double a) {
    return mean_loss_F(lin, PrimalDualState{m.w, a, -0.2, 0.3}, pr, d);
  };
  const double d2a = (f_a(1.0) - 2.0 * f_a(0.0) + f_a(-1.0));
  CHECK(d2a > 0.0);
}

TEST_CASE("per-example gradients average to the full-batch gradient") {
  Rng rng(31337);
  const ModelArch lin{ModelKind::linear_sigmoid, 2};
  const Model m = random_model(lin, rng);
  const Dataset d = random_dataset(64, 2, rng);
  const ClassPrior pr = ClassPrior::known(0.45);
  PrimalDualState s{m.w, 0.15, -0.25, 0.6};

  Vec gw(2, 0.0);
  double ga = 0.0, gb = 0.0, gal = 0.0;
  for (const auto& e : d.examples) {
    const auto g = saddle_grads(lin, s, pr, e);
    axpy(1.0, g.grad_w, gw);
    ga += g.grad_a;
    gb += g.grad_b;
    gal += g.grad_alpha;
  }
  const double n = static_cast<double>(d.size());
  scale(1.0 / n, gw);
  ga /= n;
  gb /= n;
  gal /= n;

  // full-batch gradient from dataset-level moments (independent algebraic route)
  double mean_h_pos = 0.0, mean_h_neg = 0.0, mean_ha_pos = 0.0, mean_hb_neg = 0.0;
  Vec gw_batch(2, 0.0);
  for (const auto& e : d.examples) {
    const auto sg = forward_grad(lin, s.w, e.x);
    if (e.y == +1) {
      mean_h_pos += sg.h;
      mean_ha_pos += sg.h - s.a;
      const double dh = 2.0 * (1.0 - pr.p) * (sg.h - s.a) - 2.0 * (1.0 + s.alpha) * (1.0 - pr.p);
      axpy(dh / n, sg.grad_w, gw_batch);
    } else {
      mean_h_neg += sg.h;
      mean_hb_neg += sg.h - s.b;
      const double dh = 2.0 * pr.p * (sg.h - s.b) + 2.0 * (1.0 + s.alpha) * pr.p;
      axpy(dh / n, sg.grad_w, gw_batch);
    }
  }
  const double ga_batch = -2.0 * (1.0 - pr.p) * mean_ha_pos / n;
  const double gb_batch = -2.0 * pr.p * mean_hb_neg / n;
  const double gal_batch =
      2.0 * (pr.p * mean_h_neg - (1.0 - pr.p) * mean_h_pos) / n - 2.0 * pr.p_times_q * s.alpha;

  for (std::size_t i = 0; i < 2; ++i) REQUIRE(std::abs(gw[i] - gw_batch[i]) <= 1e-12);
  REQUIRE(std::abs(ga - ga_batch) <= 1e-12);
  REQUIRE(std::abs(gb - gb_batch) <= 1e-12);
  REQUIRE(std::abs(gal - gal_batch) <= 1e-12);
}

// ---------------------------------------------------------------------------
// multi-class
// ---------------------------------------------------------------------------

TEST_CASE("multiclass F_ij: indicator off and index errors") {
  MultiClassState s = MultiClassState::zeros(3, 1, {0.2, 0.3, 0.5});
  s.w[0] = {1.0};
  s.w[1] = {0.5};
  s.w[2] = {-0.5};
  Example z{Vec{1.0}, 2};
  CHECK(multiclass_loss_Fij(kRaw1, s, 0, 1, z) == 0.0);  // y outside {i,j}, alpha_ij = 0
  CHECK_THROWS_AS(multiclass_loss_Fij(kRaw1, s, 1, 1, z), ConfigError);
}

TEST_CASE("multiclass F_12 with c=2 reduces to binary F") {
  Rng rng(404);
  const ModelArch lin{ModelKind::linear_sigmoid, 2};
  const double p = 0.35;
  for (int trial = 0; trial < 64; ++trial) {
    MultiClassState s = MultiClassState::zeros(2, 2, {p, 1.0 - p});
    for (auto& wk : s.w)
      for (auto& v : wk) v = rng.normal();
    const double a = rng.normal(), b = rng.normal(), alpha = rng.normal();
    s.a_at(0, 1) = a;
    s.b_at(0, 1) = b;
    s.alpha_at(0, 1) = alpha;

    Example z;
    z.x = {rng.normal(), rng.normal()};
    const bool positive = rng.uniform() < 0.5;
    z.y = positive ? 0 : 1;  // class 0 plays the +1 role

    Example zb = z;
    zb.y = positive ? +1 : -1;
    PrimalDualState bs{s.w[0], a, b, alpha};
    const double f_multi = multiclass_loss_Fij(lin, s, 0, 1, z);
    const double f_bin = loss_F(lin, bs, ClassPrior::known(p), zb);
    REQUIRE(f_multi == Catch::Approx(f_bin).margin(1e-14));
  }
}

TEST_CASE("multiclass gradients match finite differences") {
  Rng rng(7001);
  const ModelArch lin{ModelKind::linear_sigmoid, 2};
  for (int trial = 0; trial < 100; ++trial) {
    MultiClassState s = MultiClassState::zeros(3, 2, {0.2, 0.5, 0.3});
    for (auto& wk : s.w)
      for (auto& v : wk) v = rng.normal();
    for (auto& v : s.a) v = rng.normal();
    for (auto& v : s.b) v = rng.normal();
    for (auto& v : s.alpha) v = rng.normal();
    const std::size_t i = rng.uniform_index(3);
    std::size_t j = rng.uniform_index(3);
    if (j == i) j = (j + 1) % 3;
    Example z;
    z.x = {rng.normal(), rng.normal()};
    z.y = static_cast<int>(rng.uniform_index(3));

    const MultiGrads g = multiclass_grads(lin, s, i, j, z);
    const auto f_w = [&](const Vec& w) {
      MultiClassState t = s;
      t.w[i] = w;
      return multiclass_loss_Fij(lin, t, i, j, z);
    };
    const Vec fd_w = finite_diff_grad(f_w, s.w[i], 1e-5);
    for (std::size_t c = 0; c < 2; ++c)
      REQUIRE(std::abs(fd_w[c] - g.grad_wi[c]) / (1.0 + std::abs(g.grad_wi[c])) <= 1e-4);

    const auto f_abal = [&](const Vec& v) {
      MultiClassState t = s;
      t.a_at(i, j) = v[0];
      t.b_at(i, j) = v[1];
      t.alpha_at(i, j) = v[2];
      return multiclass_loss_Fij(lin, t, i, j, z);
    };
    const Vec fd = finite_diff_grad(f_abal, Vec{s.a_at(i, j), s.b_at(i, j), s.alpha_at(i, j)}, 1e-5);
    REQUIRE(std::abs(fd[0] - g.grad_a) / (1.0 + std::abs(g.grad_a)) <= 1e-4);
    REQUIRE(std::abs(fd[1] - g.grad_b) / (1.0 + std::abs(g.grad_b)) <= 1e-4);
    REQUIRE(std::abs(fd[2] - g.grad_alpha) / (1.0 + std::abs(g.grad_alpha)) <= 1e-4);
  }
}

namespace {

double multiclass_auc_brute(const ModelArch& arch, const std::vector<Vec>& ws, const Dataset& d) {
  const std::size_t c = ws.size();
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      if (i == j) continue;
      double wins = 0.0;
      std::size_t pairs = 0;
      for (const auto& ei : d.examples) {
        if (ei.y != static_cast<int>(i)) continue;
        for (const auto& ej : d.examples) {
          if (ej.y != static_cast<int>(j)) continue;
          const double si = forward(arch, ws[i], ei.x);
          const double sj = forward(arch, ws[i], ej.x);
          wins += si > sj ? 1.0 : (si == sj ? 0.5 : 0.0);
          ++pairs;
        }
      }
      total += wins / static_cast<double>(pairs);
    }
  return total / static_cast<double>(c * (c - 1));
}

}  // namespace

TEST_CASE("multiclass_auc: perfect, constant, and brute-force agreement") {
  const ModelArch raw{ModelKind::leaky_relu_raw, 1, 16, 1.0, 1.0};
  Dataset d2;
  d2.dim = 1;
  d2.num_classes = 2;
  d2.examples = {Example{Vec{1.0}, 0}, Example{Vec{-1.0}, 1}, Example{Vec{2.0}, 0}};
  const std::vector<Vec> one_vs_rest = {Vec{1.0}, Vec{-1.0}};
  CHECK(multiclass_auc(raw, one_vs_rest, d2) == 1.0);

  const std::vector<Vec> constant = {Vec{0.0}, Vec{0.0}};
  CHECK(multiclass_auc(raw, constant, d2) == 0.5);

  Rng rng(246);
  Dataset d3;
  d3.dim = 2;
  d3.num_classes = 3;
  for (int i = 0; i < 9; ++i)
    d3.examples.push_back({Vec{rng.normal(), rng.normal()}, i % 3});
  const ModelArch lin{ModelKind::linear_sigmoid, 2};
  std::vector<Vec> ws(3, Vec(2));
  for (auto& w : ws)
    for (auto& v : w) v = rng.normal();
  REQUIRE(multiclass_auc(lin, ws, d3) == multiclass_auc_brute(lin, ws, d3));

  Dataset missing = d3;
  std::erase_if(missing.examples, [](const Example& e) { return e.y == 1; });
  CHECK_THROWS_AS(multiclass_auc(lin, ws, missing), ClassMissingError);
}

TEST_CASE("softmax_scores normalizes to 1") {
  Rng rng(864);
  const ModelArch lin{ModelKind::linear_sigmoid, 2};
  std::vector<Vec> ws(4, Vec(2));
  for (auto& w : ws)
    for (auto& v : w) v = rng.normal();
  const auto s = softmax_scores(lin, ws, Vec{0.3, -0.8});
  double sum = 0.0;
  for (double v : s) {
    CHECK(v > 0.0);
    sum += v;
  }
  CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
}
