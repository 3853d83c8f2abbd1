#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbm/kernel.hpp"
#include "fbm/limit.hpp"
#include "fbm/lux3.hpp"
#include "fbm/price.hpp"
#include "fbm/types.hpp"

namespace fbm {

/// Worst sample seen by a checker.
struct Witness {
  double t = 0.0;
  std::vector<double> x;  // empty when the check has no simplex coordinate
  double q = 0.0;
  double value = 0.0;
};

struct ConditionReport {
  std::string id;
  bool pass = true;
  std::optional<Witness> witness;  // always set when pass is false
  double measured = 0.0;
  std::string note;
};

/// Sample points of [0, T] x K x [q_lo, q_hi].
struct SampleLattice {
  double T = 1.0;
  std::size_t t_steps = 1000;       // time step T / t_steps
  std::size_t simplex_mesh = 32;    // coordinates k / mesh
  std::size_t q_points = 41;
  double q_lo = -5.0;
  double q_hi = 5.0;

  std::vector<double> times() const;
  std::vector<double> prices() const;
};

/// All points of K with coordinates in {0, 1/mesh, ..., 1}, lexicographic.
std::vector<SimplexPoint> simplex_lattice(std::size_t r, std::size_t mesh);

/// Matrix-valued path, right-continuous and piecewise constant: values[k]
/// holds on [grid[k], grid[k+1]) and the last value holds to the horizon.
struct MatrixPath {
  std::vector<double> grid;
  std::vector<Eigen::MatrixXd> values;
};

/// d_U(u, v) = int_0^S e^{-s} sup_{t <= s} min(||u(t) - v(t)||_F, 1) ds.
/// With hq == 0 the integral of the piecewise-constant running sup is taken
/// exactly segment by segment; with hq > 0 it is the composite trapezoid rule
/// of step hq. Paths must share a grid starting at 0 (else GridMismatch).
double uniform_metric(const MatrixPath& u, const MatrixPath& v, double S, double hq = 0.0);

/// Same metric from precomputed pointwise distances on a grid.
double uniform_metric_from_distances(std::span<const double> grid, std::span<const double> dist, double S,
                                     double hq = 0.0);

using RawRateField = std::function<Eigen::MatrixXd(double t, const SimplexPoint& x, double q)>;

/// Zero row sums (tolerance 1e-12) and nonnegative off-diagonals at every
/// lattice sample. measured is the worst violation.
ConditionReport check_rate_regularity(const RawRateField& A, std::size_t r, const SampleLattice& lattice,
                                      unsigned threads = 0);
/// Overload for validated fields: a sample whose construction throws counts
/// as a violation of unknown size.
ConditionReport check_rate_regularity(const RateField& A, std::size_t r, const SampleLattice& lattice,
                                      unsigned threads = 0);

struct RateConvergenceRow {
  std::int64_t N = 0;
  double sup_distance = 0.0;
};

/// sup over the lattice's (x, q) points of d_U(A_N(., x, q), A(., x, q)) for
/// each N, with both paths sampled `substeps` times per tick up to S.
std::vector<RateConvergenceRow> check_rate_convergence(const RateField& A, std::span<const std::int64_t> Ns,
                                                       std::size_t r, const SampleLattice& lattice, double S,
                                                       std::size_t substeps = 4, unsigned threads = 0);

struct PhiPsiRow {
  std::int64_t N = 0;
  double sup_phi = 0.0;
  double sup_psi = 0.0;
};

/// sup over the lattice of |phi_N - phi| and |psi_N - psi| for each N. Each
/// lattice time is also probed 0.5 and 0.9 ticks later.
std::vector<PhiPsiRow> check_phi_psi_convergence(std::span<const std::pair<std::int64_t, PriceMechanism>> mechs_N,
                                                 const PriceMechanism& mech, std::size_t r,
                                                 const SampleLattice& lattice, unsigned threads = 0);

/// True when every row's sups are no larger than the previous row's.
bool is_non_increasing(std::span<const PhiPsiRow> rows);

using ScalarField = std::function<double(double t, const SimplexPoint& x, double q)>;

struct GrowthFit {
  double C = 0.0;
  double lambda = 0.0;
  double max_violation = 0.0;  // max_t [ s(t) - 1.05 C e^{lambda t} ]; <= 0 on success
  bool lifted = false;         // C was raised above the least-squares value
};

inline constexpr double kGrowthSlack = 1.05;

/// Least-squares fit of log sup_compact |f(t, .)| = log C + lambda t over the
/// lattice times (zero sups are skipped). If the fit with the 5% slack still
/// undercuts a sample, C is raised to the smallest value covering all of them.
GrowthFit check_growth_bound(const ScalarField& f, std::size_t r, const SampleLattice& lattice, unsigned threads = 0);

/// |q_k| <= (1 + C_T/N)^k (|q0| + 1) - 1 for every tick k, where q_path[k] is
/// the value at tick k (q_path[0] = q0). Rounding is absorbed by a relative
/// slack of 1e-12.
ConditionReport check_containment_bound(std::span<const double> q_path, double q0, double C_T, std::int64_t N);

struct SemiLipschitzEstimate {
  double M = 0.0;
  double min_abs_denominator = 0.0;
  bool near_degenerate = false;  // min |h_x| dropped below the proximity threshold
};

struct PathPair {
  lux3::SimplexPath x;
  lux3::SimplexPath x_tilde;
};

/// max over pairs and s in (0, T] of int_0^s (q_x - q_x~)^2 / int_0^s ||x - x~||^2,
/// with the q-paths from closed_form_q_path (same q0) on a grid of `steps`
/// intervals. 0/0 counts as 0.
SemiLipschitzEstimate estimate_semi_lipschitz_M(const lux3::Lux3Params& p, std::span<const PathPair> pairs, double q0,
                                               double T, std::size_t steps = 2000, double proximity = 1e-3);

}  // namespace fbm
