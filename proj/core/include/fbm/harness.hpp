#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbm/kernel.hpp"
#include "fbm/limit.hpp"
#include "fbm/lux3.hpp"
#include "fbm/price.hpp"
#include "fbm/types.hpp"

namespace fbm {

enum class InitialLaw {
  kDeterministic,  // largest-remainder rounding of N x0
  kMultinomial,    // each agent's type drawn independently from x0
};

struct Scenario {
  std::size_t r = 0;
  std::vector<std::int64_t> Ns;
  double T = 1.0;
  double h = 1e-3;  // ODE step for the reference path
  std::uint64_t seed = 0;
  std::size_t replicas = 1;

  RateField rate;
  PriceMechanism mech;                                  // limit (phi, psi)
  std::function<PriceMechanism(std::int64_t)> mech_N;   // finite-N (phi_N, psi_N)
  std::optional<lux3::Lux3Params> lux;                  // set for the three-type market
  std::optional<double> coefficient_bound;              // certified C_T, if known

  InitialLaw initial = InitialLaw::kDeterministic;
  std::vector<double> x0;
  double q0 = 0.0;

  /// Throws ValidationError describing the first offending field.
  void validate() const;
  /// Installs the lux3 mechanism, its finite-N version and the certified C_T.
  void use_lux3(const lux3::Lux3Params& p);
  /// Installs a mechanism that is the same for every N.
  void use_mechanism(PriceMechanism m);
};

/// phi = phi0 + sum_i phi_i x_i, psi = psi0 + sum_i psi_i x_i.
PriceMechanism linear_mechanism(double phi0, std::vector<double> phi, double psi0, std::vector<double> psi);
/// max over simplex vertices of |phi|, |psi| for linear_mechanism.
double linear_mechanism_bound(double phi0, std::span<const double> phi, double psi0, std::span<const double> psi);

/// Counts of a deterministic start: floor(N x0_i) plus the leftover agents
/// given to the largest remainders (ties to the lower index).
CountVector round_to_counts(std::span<const double> x0, std::int64_t N);

/// Tick that keys the initial multinomial draw; simulation ticks use 0..NT-1.
inline constexpr std::uint64_t kInitialDrawTick = ~std::uint64_t{0};

CountVector initial_counts(const Scenario& s, std::int64_t N, std::uint64_t replica);

struct SimulatedPath {
  Trajectory trajectory;             // ticks k / N, k = 0..floor(N T)
  std::vector<std::int64_t> counts;  // (floor(N T) + 1) x r, row-major
};

/// One replica of the N-agent chain. Each tick builds P from A_N(k/N, x_k, q_k),
/// draws the counts, then moves q with the new x and the old q.
SimulatedPath simulate_market_path(const Scenario& s, std::int64_t N, std::uint64_t replica);
Trajectory simulate_market(const Scenario& s, std::int64_t N, std::uint64_t replica);

/// Reference path of the fluid limit started from (x0, q0).
Trajectory limit_reference(const Scenario& s);

struct ConvergenceRow {
  std::int64_t N = 0;
  std::size_t replicas = 0;
  double mean_sup_error = 0.0;
  double std_error = 0.0;
  std::size_t containment_checked = 0;
  std::size_t containment_violations = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;

  /// Least-squares slope of log mean error against log N.
  double loglog_slope() const;
  /// mean(N_{k+1}) <= mean(N_k) + z sqrt(se_k^2 + se_{k+1}^2) for all k.
  bool non_increasing_within(double z = 2.0) const;
  /// mean(N_k) - mean(N_{k+1}) > z sqrt(se_k^2 + se_{k+1}^2) for all k.
  bool strictly_decreasing_beyond(double z = 2.0) const;
};

/// For each N: runs the replicas, measures sup over ticks of the Euclidean
/// distance between (x^N, q^N) and the reference path (Hermite-interpolated
/// to the ticks), and reports mean and standard error. Replicas run on up to
/// `threads` workers (0 = resolve_threads default); results are merged in
/// replica order. q-paths are checked against the containment bound when
/// the scenario carries a certified C_T.
ConvergenceTable convergence_study(const Scenario& s, unsigned threads = 0);

enum class MomentFault {
  kNone,
  kPreviousTick,  // oracle conditioned on tick k - 1 instead of k (regression guard)
};

struct MomentCoordinate {
  double mean_diff = 0.0;  // average of (observed - oracle)
  double std_error = 0.0;
  bool pass = true;
};

struct MomentReport {
  std::vector<MomentCoordinate> mean;     // n_i(k+1) against (n P)_i
  std::vector<MomentCoordinate> squared;  // (n_i(k+1) - n_i(k))^2 against the identity
  std::size_t containment_checked = 0;
  std::size_t containment_violations = 0;
  bool pass() const;
};

/// Checks the one-step moment identities at tick k (k >= 1): each replica
/// runs to tick k, the oracle is evaluated at the realised (n(k), q(k)), and
/// the observed step to k + 1 is compared with it. A coordinate passes when
/// the average difference is within `z` standard errors (exactly zero when
/// the standard error vanishes).
MomentReport moment_test(const Scenario& s, std::int64_t N, std::int64_t k, std::size_t replicas,
                         MomentFault fault = MomentFault::kNone, double z = 4.0, unsigned threads = 0);

}  // namespace fbm
