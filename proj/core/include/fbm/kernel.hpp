#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "fbm/random.hpp"
#include "fbm/types.hpp"

namespace fbm {

/// Generator-style matrix: rows sum to zero, off-diagonal entries are
/// nonnegative. Rows whose sum is within kRowRepairTol of zero are repaired
/// through the diagonal; anything larger is rejected.
class RateMatrix {
 public:
  static constexpr double kRowRepairTol = 1e-12;

  explicit RateMatrix(Eigen::MatrixXd entries);

  static RateMatrix zero(std::size_t r) {
    return RateMatrix(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r)));
  }

  const Eigen::MatrixXd& entries() const noexcept { return a_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(a_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Eigen::MatrixXd a_;
};

/// Row-stochastic matrix with entries in [0, 1].
class StochasticMatrix {
 public:
  static constexpr double kRowTol = 1e-12;

  explicit StochasticMatrix(Eigen::MatrixXd entries);

  static StochasticMatrix identity(std::size_t r) {
    return StochasticMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r)));
  }

  const Eigen::MatrixXd& entries() const noexcept { return p_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(p_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return p_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Eigen::MatrixXd p_;
};

/// A(t, x, q). Implementations must be pure.
using RateField = std::function<RateMatrix(double t, const SimplexPoint& x, double q)>;

/// A_N(t, x, q) := A(floor(N t) / N, x, q); piecewise constant on ticks.
RateField discretize(RateField field, std::int64_t N);

/// P = I + A / N. Throws NotStochastic when a diagonal entry is negative.
StochasticMatrix build_transition(const RateMatrix& a, std::int64_t N);

/// One tick of the chain: the agents of type i move according to
/// Multinomial(n_i, P_i.), each type drawing from its own stream
/// (key with key.type = i).
CountVector step_counts(const CountVector& n, const StochasticMatrix& P, StreamKey key);

/// Allocation-free variant of step_counts; `out` must have n.size() slots.
void step_counts_into(std::span<const std::int64_t> n, const StochasticMatrix& P, StreamKey key,
                      std::span<std::int64_t> out);

using CountDistribution = std::map<CountVector, double>;

inline constexpr double kEnumerationBudget = 1e6;

/// Exact law of step_counts(n, P, .) by convolving the per-type multinomials.
/// Throws TooLarge when prod_i C(n_i + r - 1, r - 1) exceeds the budget.
CountDistribution enumerate_one_step(const CountVector& n, const StochasticMatrix& P);

/// E[n(k+1) | n(k) = n] = n P.
Eigen::VectorXd conditional_mean(const CountVector& n, const StochasticMatrix& P);

/// E[(n_i(k+1) - n_i(k))^2 | n(k) = n] from the factorial-moment identity
///   (nP_.i)^2 + nP_.i - sum_j p_ji^2 n_j - 2 (nP_.i) n_i + n_i^2.
/// `i` is zero-based.
double conditional_squared_increment(const CountVector& n, const StochasticMatrix& P, std::size_t i);

}  // namespace fbm
