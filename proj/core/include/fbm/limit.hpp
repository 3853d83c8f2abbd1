#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "fbm/kernel.hpp"
#include "fbm/price.hpp"
#include "fbm/types.hpp"

namespace fbm {

/// Right-hand side of the fluid limit dx/dt = A(t, x, q)' x, dq/dt = g(t, x, q).
struct DriftField {
  RateField rate;
  PriceMechanism mech;
};

/// b(t, y) = (x A(t, x, q), g(t, x, q)), length r + 1. The first r entries sum
/// to zero because the rows of A do.
Eigen::VectorXd drift(const DriftField& d, double t, const MarketState& y);

/// Largest per-step simplex repair integrate_limit accepts before giving up.
inline constexpr double kMaxSimplexRepair = 1e-6;

struct LimitSolution {
  Trajectory trajectory;
  double max_repair = 0.0;  // largest per-step renormalisation correction
};

/// Classical RK4 on the uniform grid {0, h, 2h, ...} up to T (the last step
/// is shortened to land on T). After each step negatives are clamped and the
/// coordinates rescaled to sum 1; a correction above kMaxSimplexRepair
/// raises SimplexEscape.
LimitSolution integrate_limit_ex(const DriftField& d, const MarketState& y0, double T, double h);
Trajectory integrate_limit(const DriftField& d, const MarketState& y0, double T, double h);

/// max_k || y(t_k) - y(0) - int_0^{t_k} b(s, y(s)) ds ||_2 with the integral
/// by composite trapezoid on the trajectory's own grid.
double volterra_residual(const DriftField& d, const Trajectory& traj);

/// Dense output for a trajectory of the limit ODE: cubic Hermite
/// interpolation using the drift at the grid nodes as slopes.
class LimitInterpolant {
 public:
  LimitInterpolant(const DriftField& d, Trajectory traj);

  /// Full state vector (x_1..x_r, q) at time t inside the grid.
  Eigen::VectorXd operator()(double t) const;
  /// Interpolated state projected back onto the simplex.
  MarketState state(double t) const;

  const Trajectory& trajectory() const noexcept { return traj_; }

 private:
  Trajectory traj_;
  std::vector<Eigen::VectorXd> values_;
  std::vector<Eigen::VectorXd> slopes_;
};

/// Empirical Lipschitz constant of b over [0, T] x K x [q_lo, q_hi]:
/// the largest ||b(t, y1) - b(t, y2)|| / ||y1 - y2|| over `samples` random
/// nearby pairs (separation ~ `spread`).
double estimate_lipschitz(const DriftField& d, double T, double q_lo, double q_hi, std::size_t r,
                          std::size_t samples, std::uint64_t seed, double spread = 1e-3);

/// Flattens (x, q) into a length r + 1 vector.
Eigen::VectorXd to_vector(const MarketState& y);

/// Inverse of to_vector with clamping of rounding-level negatives; throws
/// SimplexEscape if the correction exceeds `max_repair`.
MarketState to_state(const Eigen::VectorXd& v, double max_repair, double* repair = nullptr);

}  // namespace fbm
