#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fbm/error.hpp"
#include "fbm/lux3.hpp"
#include "fbm/rate_models.hpp"
#include "lux3_fixtures.hpp"

using namespace fbm;
using namespace fbm::lux3;

TEST(BrouwerMap, Examples) {
  const auto p = fixtures::symmetric_market();
  const RateField zero = constant_rate_field(Eigen::MatrixXd::Zero(3, 3));
  const SimplexPoint x({0.2, 0.3, 0.5});
  EXPECT_EQ(brouwer_map(zero, x, p), x);

  const RateField A = constant_rate_field(fixtures::symmetric_rates());
  const auto c = brouwer_map(A, SimplexPoint({1.0 / 3, 1.0 / 3, 1.0 / 3}), p);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(c[i], 1.0 / 3, 1e-15);
  const auto v = brouwer_map(A, SimplexPoint({1, 0, 0}), p);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.25);
  EXPECT_DOUBLE_EQ(v[2], 0.25);
}

TEST(BrouwerMap, PreservesSimplex) {
  std::mt19937_64 gen(90);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto p = fixtures::random_market(gen);
    const RateField A = constant_rate_field(oracle::random_generator(gen, 3, 0.5));
    std::vector<double> x{u(gen), u(gen), u(gen)};
    if (trial % 10 == 0) x[0] = 0.0;  // exercise the extended rates on the face
    const double s = x[0] + x[1] + x[2];
    for (auto& v : x) v /= s;
    const auto y = brouwer_map(A, SimplexPoint(x, 1e-12), p);
    EXPECT_FALSE(validate_simplex(y.coords(), 1e-12).has_value());
  }
}

TEST(ExtendedRates, RequiresALimit) {
  const RateField oscillating = [](double, const SimplexPoint&, double q) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a(1, 0) = 0.5 * (1 + std::sin(q));
    a(1, 1) = -a(1, 0);
    return RateMatrix(a);
  };
  const SimplexPoint x({0, 0.5, 0.5});
  EXPECT_THROW(extended_rates(oscillating, x, INFINITY), ExtensionUnavailable);
  EXPECT_NO_THROW(extended_rates(oscillating, x, 1.0));
}

TEST(FindFixedPoint, SymmetricMarket) {
  const auto fp = find_fixed_point(constant_rate_field(fixtures::symmetric_rates()), fixtures::symmetric_market(),
                                    SimplexPoint({0.6, 0.3, 0.1}), 1e-12, 10000);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(fp.x0[i], 1.0 / 3, 1e-10);
  EXPECT_NEAR(fp.q0, 3.0, 1e-10);
  EXPECT_LT(fp.residual_A, 1e-10);
  ASSERT_TRUE(fp.residual_g);
  EXPECT_LT(*fp.residual_g, 1e-10);
  EXPECT_TRUE(fp.interior());
  EXPECT_TRUE(fp.within_hypotheses);
}

TEST(FindFixedPoint, ZeroRatesFixEverything) {
  const SimplexPoint start({0.2, 0.3, 0.5});
  const auto fp = find_fixed_point(constant_rate_field(Eigen::MatrixXd::Zero(3, 3)), fixtures::symmetric_market(),
                                   start, 1e-12, 100);
  EXPECT_EQ(fp.x0, start);
  EXPECT_EQ(fp.residual_A, 0.0);
}

TEST(FindFixedPoint, ConstantRatesGiveTheStationaryLaw) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd A = oracle::random_generator(gen, 3, 0.5);
    const auto p = fixtures::random_market(gen);
    const auto fp = find_fixed_point(constant_rate_field(A), p, SimplexPoint({1, 0, 0}), 1e-12, 20000);
    const Eigen::VectorXd pi = oracle::stationary(A);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(fp.x0[i], pi(static_cast<Eigen::Index>(i)), 1e-9);
    EXPECT_NEAR(fp.q0, q_x_fixed(p, fp.x0), 1e-8 * (1 + std::abs(fp.q0)));
  }
}

TEST(FindFixedPoint, PriceDependentRates) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.02, 0.15);
  for (int trial = 0; trial < 20; ++trial) {
    FeedbackRates fr;
    fr.base = Eigen::MatrixXd::Zero(3, 3);
    fr.herd = Eigen::MatrixXd::Zero(3, 3);
    fr.feedback = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) {
          fr.base(i, j) = u(gen);
          fr.herd(i, j) = u(gen);
          fr.feedback(i, j) = u(gen);
        }
    fr.kappa = 0.7;
    const auto p = fixtures::random_market(gen);
    const auto fp = find_fixed_point(fr.field(), p, SimplexPoint({0.4, 0.3, 0.3}), 1e-12, 20000);
    EXPECT_LE(fp.residual_A, 1e-8);
    ASSERT_TRUE(fp.residual_g);
    EXPECT_LE(*fp.residual_g, 1e-8);
    EXPECT_GT(fp.x0[0], 0.0);
  }
}

TEST(FindFixedPoint, FlagsBrokenBoundaryHypothesis) {
  auto p = fixtures::symmetric_market();
  p.delta = {1.0, 1.0, -1.0};
  const auto fp = find_fixed_point(constant_rate_field(fixtures::symmetric_rates()), p, SimplexPoint({0.5, 0.3, 0.2}),
                                   1e-12, 10000);
  EXPECT_FALSE(fp.within_hypotheses);
}

TEST(FindFixedPoint, GivesUpAfterMaxIter) {
  EXPECT_THROW(find_fixed_point(constant_rate_field(fixtures::symmetric_rates()), fixtures::symmetric_market(),
                                SimplexPoint({1, 0, 0}), 1e-15, 1),
               NoConvergence);
}

TEST(Multistart, DeduplicatesAndCoversTheLattice) {
  const auto points = find_fixed_points_multistart(constant_rate_field(fixtures::symmetric_rates()),
                                                   fixtures::symmetric_market(), 4, 1e-12, 10000);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_NEAR(points.front().q0, 3.0, 1e-10);
}
