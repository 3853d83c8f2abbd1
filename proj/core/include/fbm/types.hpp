#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fbm {

inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kIntegratedSimplexTol = 1e-9;

/// Occupancy of N agents across r types.
class CountVector {
 public:
  /// Throws ValidationError unless r >= 2, every count >= 0 and N >= 2.
  explicit CountVector(std::vector<std::int64_t> counts);

  std::int64_t total() const noexcept { return total_; }
  std::size_t types() const noexcept { return counts_.size(); }
  std::int64_t operator[](std::size_t i) const { return counts_[i]; }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }

  friend bool operator==(const CountVector&, const CountVector&) = default;
  friend auto operator<=>(const CountVector& a, const CountVector& b) {
    return a.counts_ <=> b.counts_;
  }

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

enum class SimplexViolationKind { kNegative, kSum, kNonFinite, kTooFewTypes };

struct SimplexViolation {
  SimplexViolationKind kind;
  std::size_t index = 0;  // offending coordinate; unused for kSum
  double amount = 0.0;    // |x_i| below zero, or |sum - 1|

  std::string describe() const;
};

/// Negativity is reported before a sum violation; returns nullopt when x lies
/// in the simplex within tol.
std::optional<SimplexViolation> validate_simplex(std::span<const double> x, double tol);

/// A point of the probability simplex in R^r.
class SimplexPoint {
 public:
  /// Throws ValidationError when validate_simplex(coords, tol) fails.
  explicit SimplexPoint(std::vector<double> coords, double tol = kSimplexTol);

  std::size_t size() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> coords_;
};

struct MarketState {
  SimplexPoint x;
  double q = 0.0;
};

/// Sampled path of (x, q) on a strictly increasing time grid.
class Trajectory {
 public:
  Trajectory() = default;

  /// Throws ValidationError if t does not exceed the last grid time.
  void push_back(double t, MarketState state);
  void reserve(std::size_t n);

  std::size_t size() const noexcept { return grid_.size(); }
  bool empty() const noexcept { return grid_.empty(); }
  std::span<const double> grid() const noexcept { return grid_; }
  const std::vector<MarketState>& states() const noexcept { return states_; }
  const MarketState& operator[](std::size_t i) const { return states_[i]; }
  std::size_t types() const { return states_.empty() ? 0 : states_.front().x.size(); }

 private:
  std::vector<double> grid_;
  std::vector<MarketState> states_;
};

SimplexPoint normalize_counts(const CountVector& n);

/// floor(N t) with a small tolerance, so that t = k / N lands on tick k
/// even when the division rounds down.
inline std::int64_t tick_index(double t, std::int64_t N) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(N) * t + 1e-9));
}

}  // namespace fbm
