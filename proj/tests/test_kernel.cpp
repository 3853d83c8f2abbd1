#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fbm/error.hpp"
#include "fbm/kernel.hpp"
#include "fbm/rate_models.hpp"
#include "oracles.hpp"

using namespace fbm;
using Eigen::MatrixXd;

namespace {

StochasticMatrix stoch(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return StochasticMatrix(m);
}

}  // namespace

TEST(RateMatrix, RepairsTinyRowDrift) {
  MatrixXd a(2, 2);
  a << -1, 1 + 5e-13, 1, -1;
  const RateMatrix fixed(a);
  EXPECT_DOUBLE_EQ(fixed.entries().row(0).sum(), 0.0);
  a(0, 1) = 1 + 1e-9;
  EXPECT_THROW(RateMatrix{a}, ValidationError);
  a << -1, 1, -0.1, 0.1;
  EXPECT_THROW(RateMatrix{a}, ValidationError);
}

TEST(BuildTransition, Examples) {
  const auto I = build_transition(RateMatrix::zero(3), 10);
  EXPECT_TRUE(I.entries().isApprox(MatrixXd::Identity(3, 3)));
  MatrixXd a(2, 2);
  a << -1, 1, 1, -1;
  const auto P = build_transition(RateMatrix(a), 10);
  EXPECT_NEAR(P(0, 0), 0.9, 1e-15);
  EXPECT_NEAR(P(0, 1), 0.1, 1e-15);
  a << -3, 3, 2, -2;
  EXPECT_THROW(build_transition(RateMatrix(a), 2), NotStochastic);
}

TEST(BuildTransition, RoundTripsTheRates) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const MatrixXd a = oracle::random_generator(gen, 4, 3.0);
    const std::int64_t N = 20;
    const auto P = build_transition(RateMatrix(a), N);
    const MatrixXd back = (P.entries() - MatrixXd::Identity(4, 4)) * static_cast<double>(N);
    EXPECT_LT((back - a).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(StepCounts, DeterministicKernels) {
  const CountVector n({3, 1});
  for (std::uint64_t t = 0; t < 20; ++t) {
    EXPECT_EQ(step_counts(n, StochasticMatrix::identity(2), {1, 0, t, 0}), n);
    EXPECT_EQ(step_counts(n, stoch({{0, 1}, {0, 1}}), {1, 0, t, 0}), CountVector({0, 4}));
  }
}

TEST(StepCounts, ConservesPopulation) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 500; ++trial) {
    const int r = 2 + trial % 5;
    const auto P = StochasticMatrix(oracle::random_stochastic(gen, r));
    std::vector<std::int64_t> c(static_cast<std::size_t>(r));
    for (auto& v : c) v = std::uniform_int_distribution<std::int64_t>(0, 500)(gen);
    c[0] += 2;
    const CountVector n(c);
    const auto next = step_counts(n, P, {static_cast<std::uint64_t>(trial), 0, 0, 0});
    EXPECT_EQ(next.total(), n.total());
  }
}

TEST(Enumerate, Examples) {
  const auto half = stoch({{0.5, 0.5}, {0.5, 0.5}});
  auto law = enumerate_one_step(CountVector({1, 1}), half);
  EXPECT_NEAR(law[CountVector({2, 0})], 0.25, 1e-15);
  EXPECT_NEAR(law[CountVector({1, 1})], 0.5, 1e-15);
  EXPECT_NEAR(law[CountVector({0, 2})], 0.25, 1e-15);

  law = enumerate_one_step(CountVector({2, 0}), stoch({{0.9, 0.1}, {0.1, 0.9}}));
  EXPECT_NEAR(law[CountVector({2, 0})], 0.81, 1e-15);
  EXPECT_NEAR(law[CountVector({1, 1})], 0.18, 1e-15);
  EXPECT_NEAR(law[CountVector({0, 2})], 0.01, 1e-15);

  law = enumerate_one_step(CountVector({3, 1, 2}), StochasticMatrix::identity(3));
  ASSERT_EQ(law.size(), 1u);
  EXPECT_EQ(law.begin()->first, CountVector({3, 1, 2}));
}

TEST(Enumerate, MatchesAgentLevelOracle) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = 2 + trial % 2;
    const MatrixXd P = oracle::random_stochastic(gen, r);
    std::vector<std::int64_t> c(static_cast<std::size_t>(r), 0);
    for (int a = 0; a < 2 + trial % 4; ++a) ++c[static_cast<std::size_t>(a % r)];
    const auto law = enumerate_one_step(CountVector(c), StochasticMatrix(P));
    const auto ref = oracle::brute_force_step(c, P);
    double total = 0.0;
    for (const auto& [k, p] : law) {
      total += p;
      EXPECT_EQ(k.total(), CountVector(c).total());
      const std::vector<std::int64_t> key(k.counts().begin(), k.counts().end());
      const auto it = ref.find(key);
      EXPECT_NEAR(p, it == ref.end() ? 0.0 : it->second, 1e-12);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Enumerate, BudgetIsEnforced) {
  const auto P = StochasticMatrix::identity(3);
  EXPECT_THROW(enumerate_one_step(CountVector({2000, 2000, 2000}), P), TooLarge);
}

TEST(Moments, Examples) {
  const auto half = stoch({{0.5, 0.5}, {0.5, 0.5}});
  const auto m = conditional_mean(CountVector({1, 1}), half);
  EXPECT_NEAR(m(0), 1.0, 1e-15);
  EXPECT_NEAR(m(1), 1.0, 1e-15);
  const auto biased = stoch({{0.9, 0.1}, {0.1, 0.9}});
  const auto m2 = conditional_mean(CountVector({2, 0}), biased);
  EXPECT_NEAR(m2(0), 1.8, 1e-15);
  EXPECT_NEAR(m2(1), 0.2, 1e-15);

  EXPECT_NEAR(conditional_squared_increment(CountVector({2, 0}), biased, 0), 0.22, 1e-14);
  EXPECT_NEAR(conditional_squared_increment(CountVector({1, 1}), half, 0), 0.5, 1e-14);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_EQ(conditional_squared_increment(CountVector({4, 1, 2}), StochasticMatrix::identity(3), i), 0.0);
}

TEST(Moments, AgreeWithEnumeration) {
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 2 + trial % 3;
    const StochasticMatrix P(oracle::random_stochastic(gen, r));
    std::vector<std::int64_t> c(static_cast<std::size_t>(r));
    for (auto& v : c) v = std::uniform_int_distribution<std::int64_t>(0, 3)(gen);
    c[0] += 2;
    const CountVector n(c);
    const auto law = enumerate_one_step(n, P);
    const auto mean = conditional_mean(n, P);
    for (std::size_t i = 0; i < static_cast<std::size_t>(r); ++i) {
      double m = 0.0, sq = 0.0;
      for (const auto& [k, p] : law) {
        m += p * static_cast<double>(k[i]);
        const double d = static_cast<double>(k[i] - n[i]);
        sq += p * d * d;
      }
      EXPECT_NEAR(mean(static_cast<Eigen::Index>(i)), m, 1e-12);
      EXPECT_NEAR(conditional_squared_increment(n, P, i), sq, 1e-12);
    }
  }
}

TEST(Moments, SamplerMatchesIdentities) {
  std::mt19937_64 gen(5);
  const StochasticMatrix P(oracle::random_stochastic(gen, 3));
  const CountVector n({40, 25, 35});
  const int draws = 100000;
  std::vector<double> s1(3, 0), s1s(3, 0), s2(3, 0), s2s(3, 0);
  for (int d = 0; d < draws; ++d) {
    const auto next = step_counts(n, P, {77, static_cast<std::uint64_t>(d), 0, 0});
    for (std::size_t i = 0; i < 3; ++i) {
      const double v = static_cast<double>(next[i]);
      const double inc = v - static_cast<double>(n[i]);
      s1[i] += v;
      s1s[i] += v * v;
      s2[i] += inc * inc;
      s2s[i] += inc * inc * inc * inc;
    }
  }
  const auto mean = conditional_mean(n, P);
  for (std::size_t i = 0; i < 3; ++i) {
    const double m1 = s1[i] / draws, se1 = std::sqrt((s1s[i] / draws - m1 * m1) / draws);
    const double m2 = s2[i] / draws, se2 = std::sqrt((s2s[i] / draws - m2 * m2) / draws);
    EXPECT_LE(std::abs(m1 - mean(static_cast<Eigen::Index>(i))), 4 * se1);
    EXPECT_LE(std::abs(m2 - conditional_squared_increment(n, P, i)), 4 * se2);
  }
}

TEST(Discretize, FreezesTimeOnTicks) {
  int calls = 0;
  RateField field = [&](double t, const SimplexPoint&, double) {
    ++calls;
    MatrixXd a(2, 2);
    a << -t, t, 0, 0;
    return RateMatrix(a);
  };
  const RateField AN = discretize(field, 4);
  const SimplexPoint x({0.5, 0.5});
  EXPECT_DOUBLE_EQ(AN(0.3, x, 0.0)(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(AN(0.49, x, 0.0)(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(AN(0.5, x, 0.0)(0, 1), 0.5);
}

TEST(FeedbackRates, RowsCloseAndLimitsExist) {
  FeedbackRates fr;
  fr.base = MatrixXd::Constant(3, 3, 0.2);
  fr.herd = MatrixXd::Constant(3, 3, 0.1);
  fr.feedback = MatrixXd::Zero(3, 3);
  fr.feedback(0, 2) = 0.5;
  fr.kappa = 2.0;
  fr.validate();
  const RateField A = fr.field();
  const SimplexPoint x({0.2, 0.3, 0.5});
  for (double q : {-1e9, -3.0, 0.0, 4.0, 1e9}) {
    const auto a = A(0.7, x, q);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a.entries().row(i).sum(), 0.0, 1e-15);
  }
  EXPECT_NEAR(A(0, x, 1e8)(0, 2), 0.2 + 0.1 * 0.5 + 0.5, 1e-12);
  EXPECT_NEAR(A(0, x, -1e8)(0, 2), 0.2 + 0.1 * 0.5, 1e-12);
}
