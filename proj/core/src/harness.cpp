#include "fbm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fbm/conditions.hpp"
#include "fbm/error.hpp"
#include "fbm/parallel.hpp"

namespace fbm {

void Scenario::validate() const {
  if (r < 2) throw ValidationError("scenario: r must be at least 2");
  if (Ns.empty()) throw ValidationError("scenario: N list is empty");
  for (std::size_t k = 0; k < Ns.size(); ++k) {
    if (Ns[k] < 2) throw ValidationError("scenario: every N must be at least 2");
    if (k > 0 && Ns[k] <= Ns[k - 1]) throw ValidationError("scenario: N list must be strictly increasing");
  }
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("scenario: T must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("scenario: h must be positive");
  if (replicas == 0) throw ValidationError("scenario: replicas must be positive");
  if (!rate) throw ValidationError("scenario: no rate field");
  if (!mech.phi || !mech.psi || !mech_N) throw ValidationError("scenario: no price mechanism");
  if (x0.size() != r) throw ValidationError("scenario: x0 must have r coordinates");
  if (auto v = validate_simplex(x0, kSimplexTol)) throw ValidationError("scenario: x0 " + v->describe());
  if (!std::isfinite(q0)) throw ValidationError("scenario: q0 must be finite");
  if (lux && r != 3) throw ValidationError("scenario: the lux3 mechanism needs r = 3");
}

void Scenario::use_lux3(const lux3::Lux3Params& p) {
  lux = p;
  mech = lux3::mechanism(p);
  mech_N = [p](std::int64_t N) { return lux3::mechanism_N(p, N); };
  coefficient_bound = lux3::coefficient_bound(p, T);
}

void Scenario::use_mechanism(PriceMechanism m) {
  lux.reset();
  mech = m;
  mech_N = [m](std::int64_t) { return m; };
}

PriceMechanism linear_mechanism(double phi0, std::vector<double> phi, double psi0, std::vector<double> psi) {
  auto affine = [](double c0, std::vector<double> c) -> PriceCoefficient {
    return [c0, c = std::move(c)](double, const SimplexPoint& x, double) {
      if (x.size() != c.size()) throw ValidationError("linear mechanism: coefficient count differs from r");
      double v = c0;
      for (std::size_t i = 0; i < c.size(); ++i) v += c[i] * x[i];
      return v;
    };
  };
  return {affine(phi0, std::move(phi)), affine(psi0, std::move(psi))};
}

double linear_mechanism_bound(double phi0, std::span<const double> phi, double psi0, std::span<const double> psi) {
  double c = 0.0;
  for (double v : phi) c = std::max(c, std::abs(phi0 + v));
  for (double v : psi) c = std::max(c, std::abs(psi0 + v));
  return c;
}

CountVector round_to_counts(std::span<const double> x0, std::int64_t N) {
  std::vector<std::int64_t> n(x0.size());
  std::vector<std::pair<double, std::size_t>> rem(x0.size());
  std::int64_t used = 0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double target = x0[i] * static_cast<double>(N);
    n[i] = static_cast<std::int64_t>(std::floor(target));
    used += n[i];
    rem[i] = {target - static_cast<double>(n[i]), i};
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; used < N; ++j, ++used) ++n[rem[j % rem.size()].second];
  while (used > N) {  // only reachable through rounding in x0 * N
    auto it = std::max_element(n.begin(), n.end());
    --*it;
    --used;
  }
  return CountVector(std::move(n));
}

CountVector initial_counts(const Scenario& s, std::int64_t N, std::uint64_t replica) {
  if (s.initial == InitialLaw::kDeterministic) return round_to_counts(s.x0, N);
  CounterRng rng(StreamKey{s.seed, replica, kInitialDrawTick, 0});
  std::vector<std::int64_t> n(s.r);
  sample_multinomial(rng, N, s.x0, n);
  return CountVector(std::move(n));
}

namespace {

SimplexPoint point_of(std::span<const std::int64_t> n, std::int64_t N) {
  std::vector<double> x(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) x[i] = static_cast<double>(n[i]) / static_cast<double>(N);
  return SimplexPoint(std::move(x));
}

std::vector<std::int64_t> as_vector(const CountVector& n) { return {n.counts().begin(), n.counts().end()}; }

double tick_time(std::int64_t k, std::int64_t N) { return static_cast<double>(k) / static_cast<double>(N); }

// The N-agent chain for one replica, advanced one tick at a time.
class Chain {
 public:
  Chain(const Scenario& s, std::int64_t N, std::uint64_t replica)
      : s_(s),
        N_(N),
        replica_(replica),
        rate_N_(discretize(s.rate, N)),
        mech_N_(s.mech_N(N)),
        n_(as_vector(initial_counts(s, N, replica))),
        next_(n_.size()),
        x_(point_of(n_, N)),
        q_(s.q0) {}

  StochasticMatrix transition() const { return build_transition(rate_N_(tick_time(k_, N_), x_, q_), N_); }

  void step() {
    const StochasticMatrix P = transition();
    step_counts_into(n_, P, StreamKey{s_.seed, replica_, static_cast<std::uint64_t>(k_), 0}, next_);
    n_.swap(next_);
    ++k_;
    SimplexPoint x_new = point_of(n_, N_);
    q_ = price_step(q_, tick_time(k_, N_), x_new, mech_N_, N_);
    if (!std::isfinite(q_)) throw NumericalError("Overflow", "log price left the representable range");
    x_ = std::move(x_new);
  }

  std::int64_t tick() const noexcept { return k_; }
  const std::vector<std::int64_t>& counts() const noexcept { return n_; }
  const SimplexPoint& x() const noexcept { return x_; }
  double q() const noexcept { return q_; }
  const RateField& rate_N() const noexcept { return rate_N_; }

 private:
  const Scenario& s_;
  std::int64_t N_;
  std::uint64_t replica_;
  RateField rate_N_;
  PriceMechanism mech_N_;
  std::vector<std::int64_t> n_, next_;
  SimplexPoint x_;
  double q_;
  std::int64_t k_ = 0;
};

std::int64_t tick_count(double T, std::int64_t N) { return tick_index(T, N); }

}  // namespace

SimulatedPath simulate_market_path(const Scenario& s, std::int64_t N, std::uint64_t replica) {
  if (N < 2) throw ValidationError("simulate_market needs N >= 2");
  Chain chain(s, N, replica);
  const std::int64_t K = tick_count(s.T, N);
  SimulatedPath out;
  out.trajectory.reserve(static_cast<std::size_t>(K) + 1);
  out.counts.reserve((static_cast<std::size_t>(K) + 1) * s.r);
  auto record = [&] {
    out.trajectory.push_back(tick_time(chain.tick(), N), MarketState{chain.x(), chain.q()});
    out.counts.insert(out.counts.end(), chain.counts().begin(), chain.counts().end());
  };
  record();
  for (std::int64_t k = 0; k < K; ++k) {
    chain.step();
    record();
  }
  return out;
}

Trajectory simulate_market(const Scenario& s, std::int64_t N, std::uint64_t replica) {
  return simulate_market_path(s, N, replica).trajectory;
}

Trajectory limit_reference(const Scenario& s) {
  const DriftField d{s.rate, s.mech};
  return integrate_limit(d, MarketState{SimplexPoint(s.x0), s.q0}, s.T, s.h);
}

double ConvergenceTable::loglog_slope() const {
  const double n = static_cast<double>(rows.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& row : rows) {
    const double x = std::log(static_cast<double>(row.N));
    const double y = std::log(row.mean_sup_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

bool ConvergenceTable::non_increasing_within(double z) const {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double se = std::hypot(rows[k].std_error, rows[k - 1].std_error);
    if (rows[k].mean_sup_error > rows[k - 1].mean_sup_error + z * se) return false;
  }
  return true;
}

bool ConvergenceTable::strictly_decreasing_beyond(double z) const {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double se = std::hypot(rows[k].std_error, rows[k - 1].std_error);
    if (!(rows[k - 1].mean_sup_error - rows[k].mean_sup_error > z * se)) return false;
  }
  return true;
}

namespace {

struct ReplicaOutcome {
  double sup_error = 0.0;
  bool containment_checked = false;
  bool containment_ok = true;
};

void mean_and_se(std::span<const double> v, double& mean, double& se) {
  const double n = static_cast<double>(v.size());
  mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

}  // namespace

ConvergenceTable convergence_study(const Scenario& s, unsigned threads) {
  s.validate();
  const DriftField d{s.rate, s.mech};
  const LimitInterpolant reference(d, limit_reference(s));
  const unsigned workers = resolve_threads(threads);

  ConvergenceTable table;
  for (std::int64_t N : s.Ns) {
    const std::int64_t K = tick_count(s.T, N);
    std::vector<Eigen::VectorXd> ref(static_cast<std::size_t>(K) + 1);
    for (std::int64_t k = 0; k <= K; ++k) ref[static_cast<std::size_t>(k)] = reference(tick_time(k, N));

    std::vector<ReplicaOutcome> outcomes(s.replicas);
    parallel_for(s.replicas, workers, [&](std::size_t rep) {
      const Trajectory path = simulate_market(s, N, rep);
      ReplicaOutcome& o = outcomes[rep];
      std::vector<double> q(path.size());
      for (std::size_t k = 0; k < path.size(); ++k) {
        o.sup_error = std::max(o.sup_error, (to_vector(path[k]) - ref[k]).norm());
        q[k] = path[k].q;
      }
      if (s.coefficient_bound) {
        o.containment_checked = true;
        o.containment_ok = check_containment_bound(q, s.q0, *s.coefficient_bound, N).pass;
      }
    });

    ConvergenceRow row;
    row.N = N;
    row.replicas = s.replicas;
    std::vector<double> errors(s.replicas);
    for (std::size_t i = 0; i < s.replicas; ++i) {
      errors[i] = outcomes[i].sup_error;
      row.containment_checked += outcomes[i].containment_checked ? 1 : 0;
      row.containment_violations += outcomes[i].containment_ok ? 0 : 1;
    }
    mean_and_se(errors, row.mean_sup_error, row.std_error);
    table.rows.push_back(row);
  }
  return table;
}

bool MomentReport::pass() const {
  for (const auto& c : mean)
    if (!c.pass) return false;
  for (const auto& c : squared)
    if (!c.pass) return false;
  return true;
}

MomentReport moment_test(const Scenario& s, std::int64_t N, std::int64_t k, std::size_t replicas, MomentFault fault,
                         double z, unsigned threads) {
  s.validate();
  if (k < 0 || (fault == MomentFault::kPreviousTick && k < 1))
    throw ValidationError("moment_test: tick out of range");
  if (replicas < 2) throw ValidationError("moment_test needs at least two replicas");
  const std::size_t r = s.r;

  // per replica: r mean differences then r squared-increment differences
  std::vector<double> diffs(replicas * 2 * r);
  std::vector<char> contained(replicas, 1);
  parallel_for(replicas, resolve_threads(threads), [&](std::size_t rep) {
    Chain chain(s, N, rep);
    std::vector<double> q_path{chain.q()};
    std::vector<std::int64_t> n_prev = chain.counts();
    SimplexPoint x_prev = chain.x();
    double q_prev = chain.q();
    for (std::int64_t j = 0; j < k; ++j) {
      n_prev = chain.counts();
      x_prev = chain.x();
      q_prev = chain.q();
      chain.step();
      q_path.push_back(chain.q());
    }
    const std::vector<std::int64_t> n_k = chain.counts();

    std::vector<std::int64_t> n_oracle = n_k;
    StochasticMatrix P = chain.transition();
    if (fault == MomentFault::kPreviousTick) {
      n_oracle = n_prev;
      P = build_transition(chain.rate_N()(tick_time(k - 1, N), x_prev, q_prev), N);
    }
    const CountVector cv(n_oracle);
    const Eigen::VectorXd mean = conditional_mean(cv, P);

    chain.step();
    q_path.push_back(chain.q());
    const auto& n_next = chain.counts();
    double* out = &diffs[rep * 2 * r];
    for (std::size_t i = 0; i < r; ++i) {
      const double inc = static_cast<double>(n_next[i] - n_k[i]);
      out[i] = static_cast<double>(n_next[i]) - mean(static_cast<Eigen::Index>(i));
      out[r + i] = inc * inc - conditional_squared_increment(cv, P, i);
    }
    if (s.coefficient_bound)
      contained[rep] = check_containment_bound(q_path, s.q0, *s.coefficient_bound, N).pass ? 1 : 0;
  });

  MomentReport report;
  report.mean.resize(r);
  report.squared.resize(r);
  std::vector<double> column(replicas);
  for (std::size_t c = 0; c < 2 * r; ++c) {
    for (std::size_t rep = 0; rep < replicas; ++rep) column[rep] = diffs[rep * 2 * r + c];
    MomentCoordinate mc;
    mean_and_se(column, mc.mean_diff, mc.std_error);
    mc.pass = mc.std_error > 0.0 ? std::abs(mc.mean_diff) <= z * mc.std_error : std::abs(mc.mean_diff) <= 1e-9;
    (c < r ? report.mean[c] : report.squared[c - r]) = mc;
  }
  if (s.coefficient_bound) {
    report.containment_checked = replicas;
    for (char ok : contained) report.containment_violations += ok ? 0 : 1;
  }
  return report;
}

}  // namespace fbm
