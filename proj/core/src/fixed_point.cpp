#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "fbm/error.hpp"
#include "fbm/lux3.hpp"
#include "fbm/parallel.hpp"

namespace fbm::lux3 {
namespace {

constexpr double kBoundaryClamp = 1e-12;

Eigen::VectorXd as_vector(const SimplexPoint& x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i];
  return v;
}

// Clamp rounding-level negatives and renormalise; throws if the point is
// genuinely outside the simplex.
SimplexPoint to_simplex(const Eigen::VectorXd& v, double tol) {
  std::vector<double> c(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double vi = v(i);
    if (vi < 0.0 && vi >= -tol) vi = 0.0;
    c[static_cast<std::size_t>(i)] = vi;
  }
  double s = 0.0;
  for (double ci : c) s += ci;
  if (std::abs(s - 1.0) <= tol && s > 0.0) {
    for (double& ci : c) ci /= s;
  }
  return SimplexPoint(std::move(c));
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

Eigen::VectorXd drift_x(const RateField& A, const SimplexPoint& x, double q) {
  return extended_rates(A, x, q).entries().transpose() * as_vector(x);
}

struct NewtonOutcome {
  bool ok = false;
  Eigen::VectorXd z;  // (x1, x2, x3, q)
};

// Solves F(x, q) = [ (A'x)_1, (A'x)_2, sum x - 1, g(x, q) ] = 0.
NewtonOutcome newton_polish(const RateField& A, const Lux3Params& p, const SimplexPoint& x_start,
                            double q_start, double tol, std::int64_t max_steps) {
  const PriceMechanism mech = mechanism(p);
  auto residual = [&](const Eigen::VectorXd& z, Eigen::VectorXd& F) -> bool {
    std::vector<double> c{z(0), z(1), z(2)};
    // A and g see the renormalised point; the simplex constraint is its own equation
    for (double ci : c) {
      if (!std::isfinite(ci) || ci < -1e-6) return false;
    }
    const double s = c[0] + c[1] + c[2];
    std::vector<double> clipped{std::max(c[0], 0.0) / s, std::max(c[1], 0.0) / s, std::max(c[2], 0.0) / s};
    SimplexPoint x(clipped);
    const RateMatrix a = A(0.0, x, z(3));
    Eigen::Vector3d raw(z(0), z(1), z(2));
    const Eigen::VectorXd ax = a.entries().transpose() * raw;
    F.resize(4);
    F(0) = ax(0);
    F(1) = ax(1);
    F(2) = z(0) + z(1) + z(2) - 1.0;
    F(3) = eval_g(mech, 0.0, x, z(3));
    return std::isfinite(F.norm());
  };

  NewtonOutcome out;
  Eigen::VectorXd z(4);
  z << x_start[0], x_start[1], x_start[2], q_start;
  Eigen::VectorXd F;
  if (!residual(z, F)) return out;
  for (std::int64_t step = 0; step < max_steps; ++step) {
    if (F.norm() <= 0.01 * tol) break;
    Eigen::MatrixXd J(4, 4);
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double hstep = 1e-7 * std::max(1.0, std::abs(z(j)));
      Eigen::VectorXd zp = z, zm = z, Fp, Fm;
      zp(j) += hstep;
      zm(j) -= hstep;
      if (!residual(zp, Fp) || !residual(zm, Fm)) return out;
      J.col(j) = (Fp - Fm) / (2.0 * hstep);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) return out;
    const Eigen::VectorXd dz = lu.solve(-F);
    // backtracking keeps the iterate evaluable
    double lambda = 1.0;
    Eigen::VectorXd z_next, F_next;
    bool accepted = false;
    for (int bt = 0; bt < 20; ++bt, lambda *= 0.5) {
      z_next = z + lambda * dz;
      if (residual(z_next, F_next) && F_next.norm() < F.norm() * (1.0 - 1e-4 * lambda)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    z = z_next;
    F = F_next;
  }
  out.ok = F.norm() <= tol;
  out.z = z;
  return out;
}

FixedPointResult make_result(const RateField& A, const Lux3Params& p, SimplexPoint x, double q,
                             std::int64_t iterations, bool polished) {
  FixedPointResult r{std::move(x), q, 0.0, std::nullopt, iterations, polished, p.boundary_hypothesis()};
  r.residual_A = drift_x(A, r.x0, q).norm();
  if (std::isfinite(q)) r.residual_g = std::abs(g_N_lux(p, 0.0, r.x0, q));
  return r;
}

}  // namespace

RateMatrix extended_rates(const RateField& A, const SimplexPoint& x, double q) {
  if (std::isnan(q)) {
    throw ExtensionUnavailable("q_x has no directional limit at this boundary point");
  }
  if (std::isfinite(q)) return A(0.0, x, q);
  const double sign = q > 0 ? 1.0 : -1.0;
  RateMatrix near = A(0.0, x, sign * kLargeLogPrice);
  const RateMatrix far = A(0.0, x, sign * 10.0 * kLargeLogPrice);
  const double gap = max_abs_diff(near.entries(), far.entries());
  if (!(gap <= kExtensionCauchyTol)) {
    std::ostringstream os;
    os << "A(x, q) does not settle as q -> " << (sign > 0 ? "+inf" : "-inf") << " (gap " << gap << ")";
    throw ExtensionUnavailable(os.str());
  }
  return near;
}

SimplexPoint brouwer_map(const RateField& A, const SimplexPoint& x, const Lux3Params& p) {
  const double q = q_x_fixed(p, x);
  const RateMatrix a = extended_rates(A, x, q);
  if (a.size() != 3) throw ValidationError("brouwer_map needs a 3x3 rate field");
  for (std::size_t i = 0; i < 3; ++i) {
    if (1.0 + a(i, i) < 0.0) throw ValidationError("I + A(x, q_x) is not stochastic");
  }
  const Eigen::VectorXd xv = as_vector(x);
  return to_simplex(xv + a.entries().transpose() * xv, kBoundaryClamp);
}

FixedPointResult find_fixed_point(const RateField& A, const Lux3Params& p, const SimplexPoint& x_init,
                                  double tol, std::int64_t max_iter, const FixedPointOptions& opts) {
  if (!(tol > 0.0) || max_iter < 1) throw ValidationError("fixed-point tolerance and budget must be positive");
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw ValidationError("damping must lie in (0, 1]");
  SimplexPoint x = x_init;
  bool newton_tried_at_this_scale = false;
  for (std::int64_t it = 0; it < max_iter; ++it) {
    const double q = q_x_fixed(p, x);
    const SimplexPoint tx = brouwer_map(A, x, p);
    const Eigen::VectorXd step = as_vector(tx) - as_vector(x);
    const double gap = step.norm();
    if (gap <= tol) return make_result(A, p, x, q, it, false);

    if (gap < opts.newton_switch && std::isfinite(q) && !newton_tried_at_this_scale) {
      const NewtonOutcome polished = newton_polish(A, p, x, q, tol, opts.newton_max_steps);
      if (polished.ok) {
        Eigen::VectorXd xz = polished.z.head(3);
        try {
          SimplexPoint x0 = to_simplex(xz, 1e-10);
          FixedPointResult r = make_result(A, p, std::move(x0), polished.z(3), it, true);
          if (r.residual_A <= tol && r.residual_g.value_or(0.0) <= tol) return r;
        } catch (const ValidationError&) {
          // Newton left the simplex; keep iterating the map
        }
      }
      newton_tried_at_this_scale = true;
    }
    if (gap < 0.1 * opts.newton_switch) newton_tried_at_this_scale = false;

    const Eigen::VectorXd next = (1.0 - opts.damping) * as_vector(x) + opts.damping * as_vector(tx);
    x = to_simplex(next, kBoundaryClamp);
  }
  throw NoConvergence("fixed-point iteration did not reach tol " + std::to_string(tol) + " in " +
                      std::to_string(max_iter) + " steps");
}

std::vector<FixedPointResult> find_fixed_points_multistart(const RateField& A, const Lux3Params& p,
                                                           std::size_t mesh, double tol, std::int64_t max_iter,
                                                           double dedup_tol, unsigned threads) {
  if (mesh < 1) throw ValidationError("multistart mesh must be >= 1");
  std::vector<SimplexPoint> starts;
  for (std::size_t i = 0; i <= mesh; ++i) {
    for (std::size_t j = 0; i + j <= mesh; ++j) {
      const double m = static_cast<double>(mesh);
      const double a = static_cast<double>(i) / m, b = static_cast<double>(j) / m;
      starts.emplace_back(std::vector<double>{a, b, std::max(0.0, 1.0 - a - b)}, 1e-12);
    }
  }
  std::vector<std::optional<FixedPointResult>> found(starts.size());
  parallel_for(starts.size(), resolve_threads(threads), [&](std::size_t s) {
    found[s] = find_fixed_point(A, p, starts[s], tol, max_iter);
  });

  std::vector<FixedPointResult> distinct;
  for (auto& r : found) {
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const FixedPointResult& d) {
      return (as_vector(d.x0) - as_vector(r->x0)).norm() <= dedup_tol;
    });
    if (!seen) distinct.push_back(std::move(*r));
  }
  return distinct;
}

}  // namespace fbm::lux3
