#include "fbm/limit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbm/error.hpp"
#include "fbm/random.hpp"

namespace fbm {

Eigen::VectorXd to_vector(const MarketState& y) {
  const auto r = static_cast<Eigen::Index>(y.x.size());
  Eigen::VectorXd v(r + 1);
  for (Eigen::Index i = 0; i < r; ++i) v(i) = y.x[static_cast<std::size_t>(i)];
  v(r) = y.q;
  return v;
}

MarketState to_state(const Eigen::VectorXd& v, double max_repair, double* repair) {
  const auto r = v.size() - 1;
  std::vector<double> x(static_cast<std::size_t>(r));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!std::isfinite(v(i))) throw SimplexEscape("non-finite state coordinate");
    x[static_cast<std::size_t>(i)] = std::max(v(i), 0.0);
    sum += x[static_cast<std::size_t>(i)];
  }
  if (!(sum > 0.0)) throw SimplexEscape("state collapsed to zero mass");
  double correction = 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    auto& xi = x[static_cast<std::size_t>(i)];
    xi /= sum;
    correction = std::max(correction, std::abs(xi - v(i)));
  }
  if (repair) *repair = correction;
  if (correction > max_repair) {
    std::ostringstream os;
    os << "simplex repair of " << correction << " exceeds " << max_repair;
    throw SimplexEscape(os.str());
  }
  if (!std::isfinite(v(r))) throw SimplexEscape("log price diverged");
  return {SimplexPoint(std::move(x), kIntegratedSimplexTol), v(r)};
}

Eigen::VectorXd drift(const DriftField& d, double t, const MarketState& y) {
  const RateMatrix a = d.rate(t, y.x, y.q);
  const auto r = static_cast<Eigen::Index>(y.x.size());
  if (static_cast<Eigen::Index>(a.size()) != r) throw ValidationError("drift: rate matrix dimension mismatch");
  Eigen::VectorXd b(r + 1);
  Eigen::VectorXd x(r);
  for (Eigen::Index i = 0; i < r; ++i) x(i) = y.x[static_cast<std::size_t>(i)];
  b.head(r) = a.entries().transpose() * x;
  b(r) = eval_g(d.mech, t, y.x, y.q);
  return b;
}

LimitSolution integrate_limit_ex(const DriftField& d, const MarketState& y0, double T, double h) {
  if (!(h > 0.0) || !(T >= 0.0)) throw ValidationError("integrate_limit needs h > 0 and T >= 0");
  LimitSolution out;
  const auto steps = static_cast<std::int64_t>(std::ceil(T / h - 1e-9));
  out.trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  out.trajectory.push_back(0.0, y0);

  // Stage points may sit a rounding error outside K; they are evaluated
  // after projection with the same repair budget as full steps.
  auto eval = [&](double t, const Eigen::VectorXd& v) { return drift(d, t, to_state(v, kMaxSimplexRepair)); };

  MarketState y = y0;
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const double t_next = std::min(static_cast<double>(k + 1) * h, T);
    const double dt = t_next - t;
    const Eigen::VectorXd v = to_vector(y);
    const Eigen::VectorXd k1 = drift(d, t, y);
    const Eigen::VectorXd k2 = eval(t + 0.5 * dt, v + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = eval(t + 0.5 * dt, v + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = eval(t_next, v + dt * k3);
    const Eigen::VectorXd next = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    double repair = 0.0;
    y = to_state(next, kMaxSimplexRepair, &repair);
    out.max_repair = std::max(out.max_repair, repair);
    out.trajectory.push_back(t_next, y);
  }
  return out;
}

Trajectory integrate_limit(const DriftField& d, const MarketState& y0, double T, double h) {
  return integrate_limit_ex(d, y0, T, h).trajectory;
}

double volterra_residual(const DriftField& d, const Trajectory& traj) {
  if (traj.empty()) return 0.0;
  const auto grid = traj.grid();
  const Eigen::VectorXd y0 = to_vector(traj[0]);
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(y0.size());
  Eigen::VectorXd b_prev = drift(d, grid[0], traj[0]);
  double worst = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const Eigen::VectorXd b = drift(d, grid[k], traj[k]);
    integral += 0.5 * (grid[k] - grid[k - 1]) * (b_prev + b);
    b_prev = b;
    worst = std::max(worst, (to_vector(traj[k]) - y0 - integral).norm());
  }
  return worst;
}

LimitInterpolant::LimitInterpolant(const DriftField& d, Trajectory traj) : traj_(std::move(traj)) {
  values_.reserve(traj_.size());
  slopes_.reserve(traj_.size());
  for (std::size_t k = 0; k < traj_.size(); ++k) {
    values_.push_back(to_vector(traj_[k]));
    slopes_.push_back(drift(d, traj_.grid()[k], traj_[k]));
  }
}

Eigen::VectorXd LimitInterpolant::operator()(double t) const {
  const auto grid = traj_.grid();
  if (grid.empty()) throw ValidationError("empty interpolant");
  if (t <= grid.front()) return values_.front();
  if (t >= grid.back()) return values_.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double t0 = grid[k], dt = grid[k + 1] - t0;
  const double s = (t - t0) / dt;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * values_[k] + h10 * dt * slopes_[k] + h01 * values_[k + 1] + h11 * dt * slopes_[k + 1];
}

MarketState LimitInterpolant::state(double t) const { return to_state((*this)(t), kMaxSimplexRepair); }

double estimate_lipschitz(const DriftField& d, double T, double q_lo, double q_hi, std::size_t r,
                          std::size_t samples, std::uint64_t seed, double spread) {
  CounterRng rng(StreamKey{seed, 0, 0, 0});
  auto random_point = [&](std::vector<double>& x) {
    // uniform on the simplex via normalised exponentials
    double s = 0.0;
    for (auto& xi : x) {
      xi = -std::log(rng.uniform_open());
      s += xi;
    }
    for (auto& xi : x) xi /= s;
  };
  double best = 0.0;
  std::vector<double> x1(r), x2(r);
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = T * rng.uniform();
    random_point(x1);
    random_point(x2);
    const double w = spread;
    for (std::size_t i = 0; i < r; ++i) x2[i] = (1.0 - w) * x1[i] + w * x2[i];
    const double q1 = q_lo + (q_hi - q_lo) * rng.uniform();
    const double q2 = std::clamp(q1 + spread * (q_hi - q_lo) * (rng.uniform() - 0.5), q_lo, q_hi);
    const MarketState y1{SimplexPoint(x1, kIntegratedSimplexTol), q1};
    const MarketState y2{SimplexPoint(x2, kIntegratedSimplexTol), q2};
    const double dist = (to_vector(y1) - to_vector(y2)).norm();
    if (dist == 0.0) continue;
    best = std::max(best, (drift(d, t, y1) - drift(d, t, y2)).norm() / dist);
  }
  return best;
}

}  // namespace fbm
