#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbm/kernel.hpp"
#include "fbm/price.hpp"
#include "fbm/types.hpp"

/// The three-type market of fundamentalists (type 1), optimists (type 2) and
/// pessimists (type 3) with log-linear excess demand.
namespace fbm::lux3 {

/// Scalar coefficient as a function of model time.
class TimeProfile {
 public:
  enum class Kind { kConstant, kLinear, kSine, kExp, kCustom };

  TimeProfile() : TimeProfile(0.0) {}
  TimeProfile(double value);  // NOLINT(google-explicit-constructor): constants read naturally

  /// a + b t
  static TimeProfile linear(double a, double b);
  /// a + b sin(w t)
  static TimeProfile sine(double a, double b, double w);
  /// a exp(b t)
  static TimeProfile exponential(double a, double b);
  static TimeProfile custom(std::function<double(double)> f, std::string label = "custom");

  double operator()(double t) const;
  bool is_constant() const noexcept { return kind_ == Kind::kConstant; }
  Kind kind() const noexcept { return kind_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::kConstant;
  double a_ = 0.0, b_ = 0.0, w_ = 0.0;
  std::function<double(double)> f_;
  std::string label_;
};

struct Lux3Params {
  std::array<TimeProfile, 3> alpha;  // demand sensitivities
  std::array<TimeProfile, 3> beta;   // reference-level coefficients, <= 0
  std::array<TimeProfile, 3> delta;  // liquidity demands
  TimeProfile log_f;                 // log fundamental value
  double denominator_floor = 1e-9;   // B_L: |h_x(t)| must stay above this

  bool is_constant() const;
  /// beta_i(t) <= 0 and a positive floor; throws ValidationError.
  void validate_at(double t) const;
  /// delta_2 delta_3 > 0 at time t (the boundary argument's hypothesis).
  bool boundary_hypothesis(double t = 0.0) const;
};

/// h_x(t) = x1 a1 + x2 a2 (1 + b2) + x3 a3 (1 + b3)
double denominator(const Lux3Params& p, double t, std::span<const double> x);

/// Coordinates must have three entries; shared guard for the closed forms.
double guarded_denominator(const Lux3Params& p, double t, std::span<const double> x);

/// log S^_i at tick k: the fundamentalist term carries beta_1 / N, the other
/// two react to the proposed price with undivided beta.
std::array<double, 3> reference_levels(const Lux3Params& p, std::int64_t k, std::int64_t N,
                                       double prev_log_price, double proposed_log_price);

/// Excess demand of one agent of `type` (0-based) at the proposed log price.
double excess_demand(const Lux3Params& p, std::size_t type, std::int64_t k, std::int64_t N,
                     double prev_log_price, double proposed_log_price);

/// Log price that clears sum_i n_i e_i = 0 at tick k. Solved from the excess
/// demands themselves (they are affine in the proposed log price).
double equilibrium_log_price(const Lux3Params& p, const CountVector& n, std::int64_t k, std::int64_t N,
                             double prev_log_price);

/// (phi, psi) with the coefficients taken at time t.
std::pair<double, double> phi_psi_lux(const Lux3Params& p, double t, const SimplexPoint& x);
double g_N_lux(const Lux3Params& p, double t, const SimplexPoint& x, double q);

/// Limit mechanism (phi, psi) with q as a dummy argument.
PriceMechanism mechanism(const Lux3Params& p);
/// Finite-N mechanism with coefficients frozen on ticks.
PriceMechanism mechanism_N(const Lux3Params& p, std::int64_t N);

/// Uniform bound C with |phi|, |psi| <= C on [0, T] x K. Exact over the
/// simplex (numerators and h are affine in x) at each sampled time; constant
/// coefficients need one sample.
double coefficient_bound(const Lux3Params& p, double T, std::size_t time_samples = 1001);

/// q_x = (x1 a1 b1 log F - sum x_i delta_i) / (x1 a1 b1) for x1 > 0. On the
/// x1 = 0 face returns +-infinity, the directional limit; NaN if that limit
/// does not exist (zero numerator). Requires constant coefficients with
/// a1 b1 != 0.
double q_x_fixed(const Lux3Params& p, const SimplexPoint& x);

/// Autonomous rates: the time argument of A is ignored (evaluated at 0).
inline constexpr double kLargeLogPrice = 1e8;
inline constexpr double kExtensionCauchyTol = 1e-9;

/// A(x, q) for finite q, or its limit A(x, +-inf) approximated by
/// A(x, +-kLargeLogPrice) after a Cauchy check against 10x that value.
RateMatrix extended_rates(const RateField& A, const SimplexPoint& x, double q);

/// T(x) = A(x, q_x)' x + x.
SimplexPoint brouwer_map(const RateField& A, const SimplexPoint& x, const Lux3Params& p);

struct FixedPointResult {
  SimplexPoint x0;
  double q0 = 0.0;                    // may be +-infinity when x0_1 = 0
  double residual_A = 0.0;            // ||A(x0, q0)' x0||_2
  std::optional<double> residual_g;   // |g(x0, q0)|, only for finite q0
  std::int64_t iterations = 0;
  bool newton_polished = false;
  bool interior() const { return x0[0] > 0.0; }
  bool within_hypotheses = true;      // delta_2 delta_3 > 0
};

struct FixedPointOptions {
  double damping = 0.5;
  double newton_switch = 1e-3;
  std::int64_t newton_max_steps = 50;
};

/// Damped iteration x <- (1 - lambda) x + lambda T(x) followed by Newton on
/// (A' x = 0, sum x = 1, g = 0) once ||T(x) - x|| is small. Throws
/// NoConvergence after max_iter damped steps.
FixedPointResult find_fixed_point(const RateField& A, const Lux3Params& p, const SimplexPoint& x_init,
                                  double tol, std::int64_t max_iter, const FixedPointOptions& opts = {});

/// Multi-start over the simplex lattice {k / mesh}; returns the distinct
/// fixed points found (distance > dedup_tol), in lattice order.
std::vector<FixedPointResult> find_fixed_points_multistart(const RateField& A, const Lux3Params& p,
                                                           std::size_t mesh, double tol, std::int64_t max_iter,
                                                           double dedup_tol = 1e-6, unsigned threads = 0);

using SimplexPath = std::function<SimplexPoint(double t)>;

/// Integrating-factor solution of dq/dt = P_x(t) q + Q_x(t) on `grid`:
///   q(t) = exp(I(t)) [ int_0^t Q_x(u) exp(-I(u)) du + q0 ],  I(t) = int_0^t P_x,
/// evaluated segment by segment with P_x and Q_x replaced by their endpoint
/// averages, which is exact for constant coefficients. grid[0] is time 0.
std::vector<double> closed_form_q_path(const Lux3Params& p, const SimplexPath& x_path, double q0,
                                       std::span<const double> grid);

}  // namespace fbm::lux3
