#include "fbm/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fbm/error.hpp"
#include "fbm/parallel.hpp"

namespace fbm {

std::vector<double> SampleLattice::times() const {
  std::vector<double> t(t_steps + 1);
  for (std::size_t k = 0; k <= t_steps; ++k) t[k] = T * static_cast<double>(k) / static_cast<double>(t_steps);
  return t;
}

std::vector<double> SampleLattice::prices() const {
  if (q_points <= 1) return {0.5 * (q_lo + q_hi)};
  std::vector<double> q(q_points);
  for (std::size_t k = 0; k < q_points; ++k)
    q[k] = q_lo + (q_hi - q_lo) * static_cast<double>(k) / static_cast<double>(q_points - 1);
  return q;
}

namespace {

void compositions(std::size_t r, std::size_t left, std::vector<std::size_t>& cur, std::size_t mesh,
                  std::vector<SimplexPoint>& out) {
  if (cur.size() + 1 == r) {
    cur.push_back(left);
    std::vector<double> x(r);
    for (std::size_t i = 0; i < r; ++i) x[i] = static_cast<double>(cur[i]) / static_cast<double>(mesh);
    out.emplace_back(std::move(x));
    cur.pop_back();
    return;
  }
  for (std::size_t k = 0; k <= left; ++k) {
    cur.push_back(k);
    compositions(r, left - k, cur, mesh, out);
    cur.pop_back();
  }
}

// Per-slot worst sample; merged in slot order so ties resolve the same way
// regardless of scheduling.
struct Worst {
  double value = -std::numeric_limits<double>::infinity();
  Witness witness;
  std::string note;
};

void keep_worse(Worst& acc, const Worst& w) {
  if (w.value > acc.value) acc = w;
}

}  // namespace

std::vector<SimplexPoint> simplex_lattice(std::size_t r, std::size_t mesh) {
  if (r < 2 || mesh == 0) throw ValidationError("simplex_lattice needs r >= 2 and mesh >= 1");
  std::vector<SimplexPoint> out;
  std::vector<std::size_t> cur;
  compositions(r, mesh, cur, mesh, out);
  return out;
}

double uniform_metric_from_distances(std::span<const double> grid, std::span<const double> dist, double S,
                                     double hq) {
  if (grid.size() != dist.size() || grid.empty()) throw GridMismatch("grid and samples differ in length");
  if (grid.front() != 0.0) throw GridMismatch("path grid must start at 0");
  if (!(S > 0.0)) throw ValidationError("uniform_metric needs S > 0");
  const std::size_t n = grid.size();
  for (std::size_t k = 1; k < n; ++k)
    if (!(grid[k] > grid[k - 1])) throw GridMismatch("path grid must be strictly increasing");

  if (hq > 0.0) {
    // trapezoid on s_j = j hq with the running sup over grid points t_k <= s_j
    const auto steps = static_cast<std::size_t>(std::ceil(S / hq - 1e-9));
    std::size_t k = 0;
    double running = 0.0;
    double total = 0.0, prev = 0.0;
    for (std::size_t j = 0; j <= steps; ++j) {
      const double s = std::min(static_cast<double>(j) * hq, S);
      while (k < n && grid[k] <= s) running = std::max(running, std::min(dist[k++], 1.0));
      const double f = std::exp(-s) * running;
      if (j > 0) total += 0.5 * (s - std::min(static_cast<double>(j - 1) * hq, S)) * (prev + f);
      prev = f;
    }
    return total;
  }

  double running = 0.0, total = 0.0;
  for (std::size_t k = 0; k < n && grid[k] < S; ++k) {
    running = std::max(running, std::min(dist[k], 1.0));
    const double end = k + 1 < n ? std::min(grid[k + 1], S) : S;
    // e^{-a} - e^{-b} = e^{-a} (1 - e^{-(b-a)})
    total += running * std::exp(-grid[k]) * -std::expm1(-(end - grid[k]));
  }
  return total;
}

double uniform_metric(const MatrixPath& u, const MatrixPath& v, double S, double hq) {
  if (u.grid.size() != u.values.size() || v.grid.size() != v.values.size())
    throw GridMismatch("path has mismatched grid and values");
  if (u.grid != v.grid) throw GridMismatch("paths are not sampled on a common grid");
  std::vector<double> dist(u.grid.size());
  for (std::size_t k = 0; k < dist.size(); ++k) {
    if (u.values[k].rows() != v.values[k].rows() || u.values[k].cols() != v.values[k].cols())
      throw GridMismatch("matrix dimensions differ");
    dist[k] = (u.values[k] - v.values[k]).norm();
  }
  return uniform_metric_from_distances(u.grid, dist, S, hq);
}

namespace {

template <class Eval>
ConditionReport regularity_impl(const char* id, Eval&& eval, const SampleLattice& lattice, std::size_t r,
                                unsigned threads) {
  const auto times = lattice.times();
  const auto prices = lattice.prices();
  const auto points = simplex_lattice(r, lattice.simplex_mesh);
  std::vector<Worst> slots(times.size());
  parallel_for(times.size(), resolve_threads(threads), [&](std::size_t k) {
    Worst w;
    for (const auto& x : points)
      for (double q : prices) {
        std::string note;
        const double v = eval(times[k], x, q, note);
        if (v > w.value) {
          w.value = v;
          w.witness = Witness{times[k], {x.coords().begin(), x.coords().end()}, q, v};
          w.note = std::move(note);
        }
      }
    slots[k] = std::move(w);
  });
  Worst acc;
  for (const auto& w : slots) keep_worse(acc, w);
  ConditionReport rep;
  rep.id = id;
  rep.measured = std::max(acc.value, 0.0);
  rep.pass = acc.value <= 0.0;
  if (!rep.pass) {
    rep.witness = acc.witness;
    rep.note = acc.note;
  }
  return rep;
}

// Positive when the matrix breaks the rate-matrix rules.
double rate_violation(const Eigen::MatrixXd& a, std::string& note) {
  double worst = -std::numeric_limits<double>::infinity();
  if (!a.allFinite()) {
    note = "non-finite entry";
    return std::numeric_limits<double>::infinity();
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double row = std::abs(a.row(i).sum()) - RateMatrix::kRowRepairTol;
    if (row > worst) {
      worst = row;
      note = "row " + std::to_string(i + 1) + " sum";
    }
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i == j) continue;
      if (-a(i, j) > worst) {
        worst = -a(i, j);
        note = "off-diagonal (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
      }
    }
  }
  return worst;
}

}  // namespace

ConditionReport check_rate_regularity(const RawRateField& A, std::size_t r, const SampleLattice& lattice,
                                      unsigned threads) {
  return regularity_impl(
      "rate-regularity",
      [&](double t, const SimplexPoint& x, double q, std::string& note) {
        const Eigen::MatrixXd a = A(t, x, q);
        if (a.rows() != static_cast<Eigen::Index>(r) || a.cols() != static_cast<Eigen::Index>(r)) {
          note = "wrong dimension";
          return std::numeric_limits<double>::infinity();
        }
        return rate_violation(a, note);
      },
      lattice, r, threads);
}

ConditionReport check_rate_regularity(const RateField& A, std::size_t r, const SampleLattice& lattice,
                                      unsigned threads) {
  return regularity_impl(
      "rate-regularity",
      [&](double t, const SimplexPoint& x, double q, std::string& note) {
        try {
          return rate_violation(A(t, x, q).entries(), note);
        } catch (const Error& e) {
          note = e.what();
          return std::numeric_limits<double>::infinity();
        }
      },
      lattice, r, threads);
}

std::vector<RateConvergenceRow> check_rate_convergence(const RateField& A, std::span<const std::int64_t> Ns,
                                                       std::size_t r, const SampleLattice& lattice, double S,
                                                       std::size_t substeps, unsigned threads) {
  const auto points = simplex_lattice(r, lattice.simplex_mesh);
  const auto prices = lattice.prices();
  const std::size_t cells = points.size() * prices.size();
  std::vector<RateConvergenceRow> rows;
  for (std::int64_t N : Ns) {
    if (N < 1) throw ValidationError("check_rate_convergence needs N >= 1");
    const RateField AN = discretize(A, N);
    const double dt = 1.0 / (static_cast<double>(N) * static_cast<double>(std::max<std::size_t>(substeps, 1)));
    const auto m = static_cast<std::size_t>(std::ceil(S / dt));
    std::vector<double> grid(m + 1);
    for (std::size_t k = 0; k <= m; ++k) grid[k] = static_cast<double>(k) * dt;
    std::vector<double> sup(cells, 0.0);
    parallel_for(cells, resolve_threads(threads), [&](std::size_t c) {
      const auto& x = points[c / prices.size()];
      const double q = prices[c % prices.size()];
      std::vector<double> dist(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k)
        dist[k] = (AN(grid[k], x, q).entries() - A(grid[k], x, q).entries()).norm();
      sup[c] = uniform_metric_from_distances(grid, dist, S);
    });
    rows.push_back({N, *std::max_element(sup.begin(), sup.end())});
  }
  return rows;
}

std::vector<PhiPsiRow> check_phi_psi_convergence(std::span<const std::pair<std::int64_t, PriceMechanism>> mechs_N,
                                                 const PriceMechanism& mech, std::size_t r,
                                                 const SampleLattice& lattice, unsigned threads) {
  const auto times = lattice.times();
  const auto prices = lattice.prices();
  const auto points = simplex_lattice(r, lattice.simplex_mesh);
  std::vector<PhiPsiRow> rows;
  for (const auto& [N, mN] : mechs_N) {
    std::vector<std::pair<double, double>> slots(times.size());
    parallel_for(times.size(), resolve_threads(threads), [&](std::size_t k) {
      double sp = 0.0, ss = 0.0;
      // lattice times may sit on ticks, where the two agree; look inside the tick too
      const double tick = 1.0 / static_cast<double>(N);
      for (double offset : {0.0, 0.5 * tick, 0.9 * tick}) {
        const double t = std::min(times[k] + offset, lattice.T);
        for (const auto& x : points)
          for (double q : prices) {
            sp = std::max(sp, std::abs(mN.phi(t, x, q) - mech.phi(t, x, q)));
            ss = std::max(ss, std::abs(mN.psi(t, x, q) - mech.psi(t, x, q)));
          }
      }
      slots[k] = {sp, ss};
    });
    PhiPsiRow row{N, 0.0, 0.0};
    for (const auto& [sp, ss] : slots) {
      row.sup_phi = std::max(row.sup_phi, sp);
      row.sup_psi = std::max(row.sup_psi, ss);
    }
    rows.push_back(row);
  }
  return rows;
}

bool is_non_increasing(std::span<const PhiPsiRow> rows) {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].sup_phi > rows[k - 1].sup_phi || rows[k].sup_psi > rows[k - 1].sup_psi) return false;
  return true;
}

GrowthFit check_growth_bound(const ScalarField& f, std::size_t r, const SampleLattice& lattice, unsigned threads) {
  const auto times = lattice.times();
  const auto prices = lattice.prices();
  const auto points = simplex_lattice(r, lattice.simplex_mesh);
  std::vector<double> sup(times.size(), 0.0);
  parallel_for(times.size(), resolve_threads(threads), [&](std::size_t k) {
    double s = 0.0;
    for (const auto& x : points)
      for (double q : prices) s = std::max(s, std::abs(f(times[k], x, q)));
    sup[k] = s;
  });

  GrowthFit fit;
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(sup[k] > 0.0)) continue;
    if (!std::isfinite(sup[k])) {
      fit.C = fit.max_violation = std::numeric_limits<double>::infinity();
      return fit;
    }
    const double y = std::log(sup[k]);
    n += 1;
    st += times[k];
    sy += y;
    stt += times[k] * times[k];
    sty += times[k] * y;
  }
  if (n == 0) return fit;  // f vanishes on the lattice
  const double var = n * stt - st * st;
  fit.lambda = var > 0.0 ? (n * sty - st * sy) / var : 0.0;
  fit.C = std::exp((sy - fit.lambda * st) / n);

  double need = 0.0;  // smallest C with sup <= slack * C e^{lambda t}
  for (std::size_t k = 0; k < times.size(); ++k)
    need = std::max(need, sup[k] * std::exp(-fit.lambda * times[k]) / kGrowthSlack);
  if (need > fit.C) {
    fit.C = need;
    fit.lifted = true;
  }
  fit.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < times.size(); ++k)
    fit.max_violation = std::max(fit.max_violation, sup[k] - kGrowthSlack * fit.C * std::exp(fit.lambda * times[k]));
  // rounding in the lift can leave a residue of a few ulps
  if (fit.lifted && fit.max_violation > 0.0 && fit.max_violation < 1e-12 * fit.C) fit.max_violation = 0.0;
  return fit;
}

ConditionReport check_containment_bound(std::span<const double> q_path, double q0, double C_T, std::int64_t N) {
  if (N < 1) throw ValidationError("containment check needs N >= 1");
  ConditionReport rep;
  rep.id = "containment";
  const double growth = 1.0 + C_T / static_cast<double>(N);
  const double base = std::abs(q0) + 1.0;
  double factor = 1.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < q_path.size(); ++k) {
    const double bound = factor * base - 1.0;
    const double excess = std::abs(q_path[k]) - bound;
    const double slack = 1e-12 * (factor * base);
    if (excess > worst) {
      worst = excess;
      if (excess > slack) {
        rep.pass = false;
        rep.witness = Witness{static_cast<double>(k) / static_cast<double>(N), {}, q_path[k], excess};
      }
    }
    factor *= growth;
  }
  rep.measured = std::max(worst, 0.0);
  return rep;
}

SemiLipschitzEstimate estimate_semi_lipschitz_M(const lux3::Lux3Params& p, std::span<const PathPair> pairs, double q0,
                                               double T, std::size_t steps, double proximity) {
  if (!(T > 0.0) || steps == 0) throw ValidationError("estimate_semi_lipschitz_M needs T > 0 and steps >= 1");
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) grid[k] = T * static_cast<double>(k) / static_cast<double>(steps);

  SemiLipschitzEstimate est;
  est.min_abs_denominator = std::numeric_limits<double>::infinity();
  for (const auto& pair : pairs) {
    const auto q = lux3::closed_form_q_path(p, pair.x, q0, grid);
    const auto qt = lux3::closed_form_q_path(p, pair.x_tilde, q0, grid);
    double num = 0.0, den = 0.0, f_prev = 0.0, g_prev = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
      const SimplexPoint x = pair.x(grid[k]);
      const SimplexPoint xt = pair.x_tilde(grid[k]);
      est.min_abs_denominator = std::min({est.min_abs_denominator, std::abs(lux3::denominator(p, grid[k], x.coords())),
                                          std::abs(lux3::denominator(p, grid[k], xt.coords()))});
      double dx2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dx2 += (x[i] - xt[i]) * (x[i] - xt[i]);
      const double dq2 = (q[k] - qt[k]) * (q[k] - qt[k]);
      if (k > 0) {
        const double dt = grid[k] - grid[k - 1];
        num += 0.5 * dt * (g_prev + dq2);
        den += 0.5 * dt * (f_prev + dx2);
        double ratio = 0.0;
        if (den > 0.0)
          ratio = num / den;
        else if (num > 0.0)
          ratio = std::numeric_limits<double>::infinity();
        est.M = std::max(est.M, ratio);
      }
      f_prev = dx2;
      g_prev = dq2;
    }
  }
  est.near_degenerate = est.min_abs_denominator < proximity;
  return est;
}

}  // namespace fbm
