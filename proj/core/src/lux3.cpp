#include "fbm/lux3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbm/error.hpp"

namespace fbm::lux3 {
namespace {

void require_three(std::size_t r) {
  if (r != 3) throw ValidationError("the three-type market needs r = 3, got r = " + std::to_string(r));
}

struct Coefficients {
  std::array<double, 3> alpha, beta, delta;
  double log_f;
};

Coefficients at(const Lux3Params& p, double t) {
  Coefficients c{};
  for (std::size_t i = 0; i < 3; ++i) {
    c.alpha[i] = p.alpha[i](t);
    c.beta[i] = p.beta[i](t);
    c.delta[i] = p.delta[i](t);
  }
  c.log_f = p.log_f(t);
  return c;
}

double h_of(const Coefficients& c, std::span<const double> x) {
  return x[0] * c.alpha[0] + x[1] * c.alpha[1] * (1.0 + c.beta[1]) + x[2] * c.alpha[2] * (1.0 + c.beta[2]);
}

double phi_numerator(const Coefficients& c, std::span<const double> x) {
  return x[0] * c.alpha[0] * c.beta[0];
}

double psi_numerator(const Coefficients& c, std::span<const double> x) {
  return x[0] * c.delta[0] + x[1] * c.delta[1] + x[2] * c.delta[2] - x[0] * c.alpha[0] * c.beta[0] * c.log_f;
}

double guard(const Lux3Params& p, double h, double t) {
  if (!(std::abs(h) >= p.denominator_floor)) {
    std::ostringstream os;
    os << "|h_x(t)| = " << std::abs(h) << " < B_L = " << p.denominator_floor << " at t = " << t;
    throw DegenerateDenominator(os.str());
  }
  return h;
}

}  // namespace

TimeProfile::TimeProfile(double value) : kind_(Kind::kConstant), a_(value) {}

TimeProfile TimeProfile::linear(double a, double b) {
  TimeProfile p(a);
  p.kind_ = Kind::kLinear;
  p.b_ = b;
  return p;
}

TimeProfile TimeProfile::sine(double a, double b, double w) {
  TimeProfile p(a);
  p.kind_ = Kind::kSine;
  p.b_ = b;
  p.w_ = w;
  return p;
}

TimeProfile TimeProfile::exponential(double a, double b) {
  TimeProfile p(a);
  p.kind_ = Kind::kExp;
  p.b_ = b;
  return p;
}

TimeProfile TimeProfile::custom(std::function<double(double)> f, std::string label) {
  TimeProfile p;
  p.kind_ = Kind::kCustom;
  p.f_ = std::move(f);
  p.label_ = std::move(label);
  return p;
}

double TimeProfile::operator()(double t) const {
  switch (kind_) {
    case Kind::kConstant: return a_;
    case Kind::kLinear: return a_ + b_ * t;
    case Kind::kSine: return a_ + b_ * std::sin(w_ * t);
    case Kind::kExp: return a_ * std::exp(b_ * t);
    case Kind::kCustom: return f_(t);
  }
  return a_;
}

std::string TimeProfile::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::kConstant: os << a_; break;
    case Kind::kLinear: os << "linear(" << a_ << ", " << b_ << ")"; break;
    case Kind::kSine: os << "sine(" << a_ << ", " << b_ << ", " << w_ << ")"; break;
    case Kind::kExp: os << "exp(" << a_ << ", " << b_ << ")"; break;
    case Kind::kCustom: os << label_; break;
  }
  return os.str();
}

bool Lux3Params::is_constant() const {
  auto all = [](const std::array<TimeProfile, 3>& a) {
    return std::all_of(a.begin(), a.end(), [](const TimeProfile& f) { return f.is_constant(); });
  };
  return all(alpha) && all(beta) && all(delta) && log_f.is_constant();
}

void Lux3Params::validate_at(double t) const {
  if (!(denominator_floor > 0.0)) throw ValidationError("denominator floor B_L must be positive");
  for (std::size_t i = 0; i < 3; ++i) {
    const double b = beta[i](t);
    if (!(b <= 0.0)) {
      throw ValidationError("beta_" + std::to_string(i + 1) + "(" + std::to_string(t) + ") = " +
                            std::to_string(b) + " must be <= 0");
    }
  }
}

bool Lux3Params::boundary_hypothesis(double t) const { return delta[1](t) * delta[2](t) > 0.0; }

double denominator(const Lux3Params& p, double t, std::span<const double> x) {
  require_three(x.size());
  return h_of(at(p, t), x);
}

double guarded_denominator(const Lux3Params& p, double t, std::span<const double> x) {
  return guard(p, denominator(p, t, x), t);
}

std::array<double, 3> reference_levels(const Lux3Params& p, std::int64_t k, std::int64_t N,
                                       double prev_log_price, double proposed_log_price) {
  if (N < 1) throw ValidationError("reference_levels needs N >= 1");
  const double t = static_cast<double>(k) / static_cast<double>(N);
  const Coefficients c = at(p, t);
  return {prev_log_price + c.beta[0] / static_cast<double>(N) * (prev_log_price - c.log_f),
          prev_log_price + c.beta[1] * (prev_log_price - proposed_log_price),
          prev_log_price + c.beta[2] * (prev_log_price - proposed_log_price)};
}

double excess_demand(const Lux3Params& p, std::size_t type, std::int64_t k, std::int64_t N,
                     double prev_log_price, double proposed_log_price) {
  if (type >= 3) throw ValidationError("agent type must be 0, 1 or 2");
  const double t = static_cast<double>(k) / static_cast<double>(N);
  const auto ref = reference_levels(p, k, N, prev_log_price, proposed_log_price);
  return p.alpha[type](t) * (ref[type] - proposed_log_price) + p.delta[type](t) / static_cast<double>(N);
}

double equilibrium_log_price(const Lux3Params& p, const CountVector& n, std::int64_t k, std::int64_t N,
                             double prev_log_price) {
  require_three(n.types());
  if (n.total() != N) throw ValidationError("count vector total differs from N");
  const double t = static_cast<double>(k) / static_cast<double>(N);
  const SimplexPoint x = normalize_counts(n);
  guarded_denominator(p, t, x.coords());

  // Aggregate demand is affine in the proposed price; evaluate it at the
  // previous price and one unit above, relative to prev for accuracy.
  auto aggregate = [&](double proposed) {
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      total += static_cast<double>(n[i]) * excess_demand(p, i, k, N, prev_log_price, proposed);
    }
    return total;
  };
  const double at_prev = aggregate(prev_log_price);
  const double slope = aggregate(prev_log_price + 1.0) - at_prev;
  if (slope == 0.0) throw DegenerateDenominator("aggregate excess demand does not depend on price");
  return prev_log_price - at_prev / slope;
}

std::pair<double, double> phi_psi_lux(const Lux3Params& p, double t, const SimplexPoint& x) {
  require_three(x.size());
  const Coefficients c = at(p, t);
  const double h = guard(p, h_of(c, x.coords()), t);
  return {phi_numerator(c, x.coords()) / h, psi_numerator(c, x.coords()) / h};
}

double g_N_lux(const Lux3Params& p, double t, const SimplexPoint& x, double q) {
  const auto [phi, psi] = phi_psi_lux(p, t, x);
  return phi * q + psi;
}

PriceMechanism mechanism(const Lux3Params& p) {
  return {[p](double t, const SimplexPoint& x, double) { return phi_psi_lux(p, t, x).first; },
          [p](double t, const SimplexPoint& x, double) { return phi_psi_lux(p, t, x).second; }};
}

PriceMechanism mechanism_N(const Lux3Params& p, std::int64_t N) { return discretize(mechanism(p), N); }

double coefficient_bound(const Lux3Params& p, double T, std::size_t time_samples) {
  const std::size_t samples = p.is_constant() ? 1 : std::max<std::size_t>(time_samples, 2);
  double bound = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = samples == 1 ? 0.0 : T * static_cast<double>(s) / static_cast<double>(samples - 1);
    const Coefficients c = at(p, t);
    double h_min = std::numeric_limits<double>::infinity();
    double num_max = 0.0;
    int sign = 0;
    for (std::size_t v = 0; v < 3; ++v) {
      std::array<double, 3> e{0.0, 0.0, 0.0};
      e[v] = 1.0;
      const double h = h_of(c, e);
      const int s_h = (h > 0) - (h < 0);
      if (s_h == 0 || (sign != 0 && s_h != sign)) {
        throw DegenerateDenominator("h_x(t) vanishes on the simplex at t = " + std::to_string(t));
      }
      sign = s_h;
      h_min = std::min(h_min, std::abs(h));
      num_max = std::max({num_max, std::abs(phi_numerator(c, e)), std::abs(psi_numerator(c, e))});
    }
    if (h_min < p.denominator_floor) throw DegenerateDenominator("min |h_x| below B_L");
    bound = std::max(bound, num_max / h_min);
  }
  return bound;
}

double q_x_fixed(const Lux3Params& p, const SimplexPoint& x) {
  require_three(x.size());
  if (!p.is_constant()) throw ValidationError("q_x needs constant coefficients");
  const Coefficients c = at(p, 0.0);
  const double ab = c.alpha[0] * c.beta[0];
  if (ab == 0.0) throw ValidationError("q_x needs alpha_1 beta_1 != 0");
  const double liquidity = x[0] * c.delta[0] + x[1] * c.delta[1] + x[2] * c.delta[2];
  if (x[0] > 0.0) return (x[0] * ab * c.log_f - liquidity) / (x[0] * ab);
  // x1 -> 0+: q_x ~ -liquidity / (x1 a1 b1)
  const double numerator = -liquidity;
  if (numerator == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double sign = (numerator > 0) == (ab > 0) ? 1.0 : -1.0;
  return sign * std::numeric_limits<double>::infinity();
}

std::vector<double> closed_form_q_path(const Lux3Params& p, const SimplexPath& x_path, double q0,
                                       std::span<const double> grid) {
  if (grid.empty()) return {};
  const std::size_t n = grid.size();
  std::vector<double> P(n), Q(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid[k];
    const SimplexPoint x = x_path(t);
    require_three(x.size());
    const Coefficients c = at(p, t);
    const double h = guard(p, h_of(c, x.coords()), t);
    P[k] = phi_numerator(c, x.coords()) / h;
    Q[k] = psi_numerator(c, x.coords()) / h;
  }

  // Variation of constants on each segment with the coefficients averaged
  // over the segment; exact when they do not move.
  std::vector<double> q(n);
  q[0] = q0;
  for (std::size_t k = 1; k < n; ++k) {
    const double dt = grid[k] - grid[k - 1];
    if (!(dt > 0.0)) throw ValidationError("closed_form_q_path grid must be strictly increasing");
    const double z = 0.5 * dt * (P[k - 1] + P[k]);
    const double psi_bar = 0.5 * (Q[k - 1] + Q[k]);
    const double growth = z == 0.0 ? 1.0 : std::expm1(z) / z;  // (e^z - 1) / z
    q[k] = std::exp(z) * q[k - 1] + psi_bar * dt * growth;
  }
  return q;
}

}  // namespace fbm::lux3
