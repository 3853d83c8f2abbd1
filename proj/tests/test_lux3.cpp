#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fbm/error.hpp"
#include "fbm/limit.hpp"
#include "fbm/lux3.hpp"
#include "fbm/rate_models.hpp"
#include "lux3_fixtures.hpp"

using namespace fbm;
using namespace fbm::lux3;

TEST(TimeProfile, Evaluates) {
  EXPECT_EQ(TimeProfile(2.0)(7.0), 2.0);
  EXPECT_DOUBLE_EQ(TimeProfile::linear(1, 2)(0.5), 2.0);
  EXPECT_DOUBLE_EQ(TimeProfile::sine(1, 2, 3)(0.5), 1 + 2 * std::sin(1.5));
  EXPECT_DOUBLE_EQ(TimeProfile::exponential(2, -1)(1.0), 2 * std::exp(-1.0));
  EXPECT_TRUE(TimeProfile(1.0).is_constant());
  EXPECT_FALSE(TimeProfile::linear(1, 0).is_constant());
}

TEST(Params, RejectsPositiveBeta) {
  auto p = fixtures::symmetric_market();
  p.beta[1] = TimeProfile::linear(-0.5, 1.0);  // positive after t = 0.5
  EXPECT_NO_THROW(p.validate_at(0.0));
  EXPECT_THROW(p.validate_at(1.0), ValidationError);
}

TEST(ReferenceLevels, Examples) {
  Lux3Params p;
  p.alpha = {1.0, 1.0, 1.0};
  p.beta = {0.0, 0.0, 0.0};
  auto lv = reference_levels(p, 0, 5, 1.3, 9.0);
  for (double v : lv) EXPECT_EQ(v, 1.3);

  p.beta = {-1.0, -0.5, 0.0};
  p.log_f = 0.0;
  lv = reference_levels(p, 0, 1, 2.0, 7.0);
  EXPECT_DOUBLE_EQ(lv[0], 0.0);
  lv = reference_levels(p, 0, 1, 1.0, 3.0);
  EXPECT_DOUBLE_EQ(lv[1], 2.0);
}

TEST(ExcessDemand, Examples) {
  Lux3Params p;
  p.alpha = {0.0, 1.0, 1.0};
  EXPECT_EQ(excess_demand(p, 0, 0, 10, 1.0, 2.0), 0.0);
  p.alpha = {1.0, 1.0, 1.0};
  p.delta = {2.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(excess_demand(p, 0, 0, 4, 1.0, 1.0), 0.5);
  p.delta = {0.0, 0.0, 0.0};
  p.beta = {0.0, -0.5, -0.5};
  // at its own reference level a type demands nothing
  const double prev = 1.0, proposed = 1.0;
  EXPECT_EQ(excess_demand(p, 1, 0, 4, prev, proposed), 0.0);
}

TEST(EquilibriumLogPrice, Examples) {
  Lux3Params p;
  p.alpha = {1.0, 1.0, 1.0};
  p.beta = {0.0, -0.3, -0.6};
  EXPECT_DOUBLE_EQ(equilibrium_log_price(p, CountVector({2, 1, 1}), 0, 4, 0.8), 0.8);

  p.beta = {-1.0, 0.0, 0.0};
  p.log_f = 0.0;
  EXPECT_DOUBLE_EQ(equilibrium_log_price(p, CountVector({4, 0, 0}), 0, 4, 2.0), 1.5);

  p.beta = {0.0, -1.0, -1.0};
  EXPECT_THROW(equilibrium_log_price(p, CountVector({0, 2, 2}), 0, 4, 0.0), DegenerateDenominator);
}

TEST(EquilibriumLogPrice, ClearsTheMarket) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 2000; ++trial) {
    oracle::Lux3Coeffs raw;
    const auto p = fixtures::random_market(gen, &raw);
    const std::int64_t N = 2 + trial % 50;
    std::vector<std::int64_t> n(3, 0);
    for (std::int64_t a = 0; a < N; ++a) ++n[std::uniform_int_distribution<int>(0, 2)(gen)];
    const double prev = std::uniform_real_distribution<double>(-3, 3)(gen);
    const double price = equilibrium_log_price(p, CountVector(n), trial % 7, N, prev);
    EXPECT_NEAR(oracle::aggregate_excess(raw, n, N, prev, price), 0.0, 1e-10);
    EXPECT_NEAR(price, oracle::clearing_price_bisect(raw, n, N, prev), 1e-9);
  }
}

TEST(PhiPsi, Examples) {
  const auto p = [] {
    auto q = fixtures::symmetric_market();
    q.delta = {0.0, 0.0, 0.0};
    return q;
  }();
  EXPECT_DOUBLE_EQ(g_N_lux(p, 0, SimplexPoint({1, 0, 0}), 3.0), -3.0);
  const auto [phi, psi] = phi_psi_lux(p, 0, SimplexPoint({1, 0, 0}));
  EXPECT_DOUBLE_EQ(phi, -1.0);
  EXPECT_DOUBLE_EQ(psi, 0.0);
  EXPECT_EQ(g_N_lux(p, 0, SimplexPoint({0, 0.5, 0.5}), 11.0), 0.0);

  Lux3Params d;
  d.alpha = {1.0, 1.0, 1.0};
  d.beta = {0.0, -1.0, -1.0};
  EXPECT_THROW(g_N_lux(d, 0, SimplexPoint({0, 0.5, 0.5}), 0.0), DegenerateDenominator);
}

TEST(PhiPsi, ConsistentWithEvalG) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = fixtures::random_market(gen);
    std::vector<double> x{std::uniform_real_distribution<double>(0, 1)(gen), 0, 0};
    x[1] = std::uniform_real_distribution<double>(0, 1 - x[0])(gen);
    x[2] = 1 - x[0] - x[1];
    const SimplexPoint xs(x);
    const double q = std::uniform_real_distribution<double>(-5, 5)(gen);
    EXPECT_NEAR(eval_g(mechanism(p), 0.0, xs, q), g_N_lux(p, 0.0, xs, q), 1e-14);
  }
}

TEST(CoefficientBound, CoversTheSimplex) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = fixtures::random_market(gen);
    const double C = coefficient_bound(p, 1.0);
    for (int s = 0; s < 200; ++s) {
      std::vector<double> x{std::uniform_real_distribution<double>(0, 1)(gen), 0, 0};
      x[1] = std::uniform_real_distribution<double>(0, 1 - x[0])(gen);
      x[2] = 1 - x[0] - x[1];
      const auto [phi, psi] = phi_psi_lux(p, 0.0, SimplexPoint(x));
      EXPECT_LE(std::abs(phi), C * (1 + 1e-12));
      EXPECT_LE(std::abs(psi), C * (1 + 1e-12));
    }
  }
}

TEST(QxFixed, Examples) {
  Lux3Params p;
  p.alpha = {1.0, 1.0, 1.0};
  p.beta = {-1.0, -0.5, -0.5};
  p.delta = {1e-12, 1e-12, 1e-12};
  p.log_f = 5.0;
  EXPECT_NEAR(q_x_fixed(p, SimplexPoint({0.5, 0.25, 0.25})), 5.0, 1e-9);

  p.delta = {1.0, 1.0, 1.0};
  p.log_f = 0.0;
  EXPECT_DOUBLE_EQ(q_x_fixed(p, SimplexPoint({0.5, 0.25, 0.25})), 2.0);
  const double edge = q_x_fixed(p, SimplexPoint({0, 0.5, 0.5}));
  EXPECT_TRUE(std::isinf(edge));
  EXPECT_GT(edge, 0);
  // the sentinel is the limit approached from the interior
  EXPECT_GT(q_x_fixed(p, SimplexPoint({1e-9, 0.5 - 5e-10, 0.5 - 5e-10})), 1e8);
}

TEST(ClosedFormQPath, Examples) {
  std::vector<double> grid(1001);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = 1e-3 * static_cast<double>(k);

  auto p = fixtures::symmetric_market();
  p.delta = {0.0, 0.0, 0.0};
  const SimplexPath pure_fund = [](double) { return SimplexPoint({1, 0, 0}); };
  auto q = closed_form_q_path(p, pure_fund, 2.0, grid);
  for (std::size_t k = 0; k < grid.size(); k += 100) EXPECT_NEAR(q[k], 2.0 * std::exp(-grid[k]), 1e-6);

  p.beta = {0.0, -0.5, -0.5};
  p.delta = {0.6, 0.6, 0.6};
  const SimplexPath mixed = [](double) { return SimplexPoint({0.5, 0.25, 0.25}); };
  const double c = 0.6 / denominator(p, 0.0, std::vector<double>{0.5, 0.25, 0.25});
  q = closed_form_q_path(p, mixed, 1.0, grid);
  for (std::size_t k = 0; k < grid.size(); k += 100) EXPECT_NEAR(q[k], 1.0 + c * grid[k], 1e-12);

  p = fixtures::symmetric_market();
  const SimplexPoint x({0.5, 0.25, 0.25});
  const double qx = q_x_fixed(p, x);
  q = closed_form_q_path(p, [&](double) { return x; }, qx, grid);
  for (double v : q) EXPECT_NEAR(v, qx, 1e-12);
}

TEST(ClosedFormQPath, AgreesWithIntegrator) {
  std::mt19937_64 gen(44);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = fixtures::random_market(gen);
    const Eigen::MatrixXd A = oracle::random_generator(gen, 3, 1.0);
    const DriftField d{constant_rate_field(A), mechanism(p)};
    const Trajectory ref = integrate_limit(d, {SimplexPoint({0.2, 0.5, 0.3}), 0.4}, 5.0, 1e-3);
    const LimitInterpolant dense(d, ref);
    const auto q = closed_form_q_path(p, [&](double t) { return dense.state(t).x; }, 0.4, ref.grid());
    double worst = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) worst = std::max(worst, std::abs(q[k] - ref[k].q));
    EXPECT_LE(worst, 1e-6);
  }
}
