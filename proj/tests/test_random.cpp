#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "fbm/random.hpp"
#include "oracles.hpp"

using namespace fbm;

TEST(CounterRng, SameKeySameStream) {
  CounterRng a(StreamKey{1, 2, 3, 4}), b(StreamKey{1, 2, 3, 4});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(CounterRng, NeighbouringKeysDiffer) {
  const StreamKey base{9, 0, 0, 0};
  std::vector<std::uint64_t> firsts;
  for (std::uint64_t c = 0; c < 4; ++c) {
    StreamKey k = base;
    k.seed += c == 0;
    k.replica += c == 1;
    k.tick += c == 2;
    k.type += c == 3;
    firsts.push_back(CounterRng(k)());
  }
  firsts.push_back(CounterRng(base)());
  std::sort(firsts.begin(), firsts.end());
  EXPECT_EQ(std::adjacent_find(firsts.begin(), firsts.end()), firsts.end());
}

TEST(CounterRng, UniformMoments) {
  CounterRng rng(StreamKey{5, 0, 0, 0});
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(s2 / n, 1.0 / 3, 0.005);
}

// Pearson chi-square against the exact pmf; cells with small expectation
// are pooled into the tails.
static double binomial_chi2(std::int64_t n, double p, int draws, std::uint64_t seed, int& dof) {
  std::vector<int> hist(static_cast<std::size_t>(n) + 1, 0);
  CounterRng rng(StreamKey{seed, 0, 0, 0});
  for (int i = 0; i < draws; ++i) {
    const auto k = sample_binomial(rng, n, p);
    EXPECT_GE(k, 0);
    EXPECT_LE(k, n);
    ++hist[static_cast<std::size_t>(k)];
  }
  double chi2 = 0, pooled_obs = 0, pooled_exp = 0;
  dof = -1;
  for (std::int64_t k = 0; k <= n; ++k) {
    pooled_obs += hist[static_cast<std::size_t>(k)];
    pooled_exp += draws * oracle::binomial_pmf(n, p, k);
    if (pooled_exp >= 20 || k == n) {
      if (pooled_exp > 0) {
        chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++dof;
      }
      pooled_obs = pooled_exp = 0;
    }
  }
  return chi2;
}

TEST(Binomial, MatchesPmfAcrossRegimes) {
  struct Case {
    std::int64_t n;
    double p;
  };
  // inversion (n p < 10), BTRS, and the p > 1/2 reflection
  for (const Case c : {Case{5, 0.3}, Case{40, 0.1}, Case{60, 0.5}, Case{1000, 0.03}, Case{500, 0.8}, Case{10000, 0.37}}) {
    int dof = 0;
    const double chi2 = binomial_chi2(c.n, c.p, 200000, static_cast<std::uint64_t>(c.n), dof);
    // mean + 5 sd of chi-square(dof)
    EXPECT_LT(chi2, dof + 5 * std::sqrt(2.0 * dof)) << "n=" << c.n << " p=" << c.p;
  }
}

TEST(Binomial, Edges) {
  CounterRng rng(StreamKey{1, 0, 0, 0});
  EXPECT_EQ(sample_binomial(rng, 0, 0.4), 0);
  EXPECT_EQ(sample_binomial(rng, 17, 0.0), 0);
  EXPECT_EQ(sample_binomial(rng, 17, 1.0), 17);
}

TEST(Multinomial, ConservesAndRespectsZeros) {
  CounterRng rng(StreamKey{3, 0, 0, 0});
  const std::vector<double> prob{0.2, 0.0, 0.5, 0.3, 0.0};
  std::vector<std::int64_t> out(prob.size());
  for (int i = 0; i < 10000; ++i) {
    sample_multinomial(rng, 37, prob, out);
    EXPECT_EQ(std::accumulate(out.begin(), out.end(), std::int64_t{0}), 37);
    EXPECT_EQ(out[1], 0);
    EXPECT_EQ(out[4], 0);
  }
}
