#include "fbm_cli/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fbm/conditions.hpp"
#include "fbm/error.hpp"
#include "fbm/harness.hpp"
#include "fbm/limit.hpp"
#include "fbm/lux3.hpp"
#include "fbm/parallel.hpp"
#include "fbm_cli/output.hpp"
#include "fbm_cli/scenario_file.hpp"

namespace fbm::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string scenario;
  std::optional<std::int64_t> n;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

class Runner {
 public:
  Runner(const Options& opt, std::ostream& out) : opt_(opt), out_(out) {
    cfg_ = parse_scenario_file(opt.scenario);
    if (opt.seed) cfg_.scenario.seed = *opt.seed;
    fs::create_directories(opt.out_dir);
  }

  void simulate() {
    const Scenario& s = cfg_.scenario;
    std::int64_t N = 0;
    if (opt_.n) {
      N = *opt_.n;
    } else if (s.Ns.size() == 1) {
      N = s.Ns.front();
    } else {
      throw ValidationError("simulate: pass --n when population.N lists several values");
    }
    if (N < 2) throw ValidationError("--n must be at least 2");
    std::vector<Trajectory> paths(s.replicas);
    parallel_for(s.replicas, resolve_threads(), [&](std::size_t rep) { paths[rep] = simulate_market(s, N, rep); });
    for (std::size_t rep = 0; rep < s.replicas; ++rep)
      emit_trajectory(paths[rep], "trajectory_N" + std::to_string(N) + "_r" + std::to_string(rep) + ".csv");
  }

  void limit() { emit_trajectory(limit_reference(cfg_.scenario), "limit.csv"); }

  void converge() {
    Scenario s = cfg_.scenario;
    if (opt_.n) s.Ns = {*opt_.n};
    const ConvergenceTable table = convergence_study(s);
    const fs::path path = fs::path(opt_.out_dir) / "convergence.jsonl";
    write_table(table, path);
    for (const auto& row : table.rows)
      say("N=" + std::to_string(row.N) + " mean_sup_error=" + format_double(row.mean_sup_error) +
          " std_error=" + format_double(row.std_error));
    say("wrote " + path.string());
  }

  void fixedpoint() {
    if (!cfg_.lux) throw ValidationError("fixedpoint needs model.mechanism = lux3");
    if (!cfg_.autonomous_rates()) throw ValidationError("fixedpoint needs rates that do not depend on time");
    const auto& c = cfg_.checks;
    const auto points = lux3::find_fixed_points_multistart(cfg_.scenario.rate, *cfg_.lux, c.fixedpoint_mesh,
                                                           c.fixedpoint_tol, c.fixedpoint_max_iter);
    const fs::path path = fs::path(opt_.out_dir) / "fixed_points.jsonl";
    write_fixed_points(points, path);
    say("found " + std::to_string(points.size()) + " fixed point(s); wrote " + path.string());
  }

  void check() {
    std::vector<ConditionReport> reports = run_checks();
    std::string text;
    std::size_t passed = 0;
    for (const auto& rep : reports) {
      text += format_report(rep) + "\n";
      passed += rep.pass ? 1 : 0;
      say(rep.id + ": " + (rep.pass ? "pass" : "FAIL"));
    }
    const fs::path path = fs::path(opt_.out_dir) / "check.txt";
    write_text(path, text);
    say(std::to_string(passed) + "/" + std::to_string(reports.size()) + " checks pass; wrote " + path.string());
  }

 private:
  void say(const std::string& line) {
    if (!opt_.quiet) out_ << line << '\n';
  }

  void emit_trajectory(const Trajectory& traj, const std::string& name) {
    const fs::path path = fs::path(opt_.out_dir) / name;
    write_trajectory(traj, path);
    say("wrote " + path.string());
  }

  std::vector<ConditionReport> run_checks() {
    const Scenario& s = cfg_.scenario;
    const SampleLattice& L = cfg_.checks.lattice;
    std::vector<ConditionReport> reports;

    reports.push_back(check_rate_regularity(s.rate, s.r, L));

    {
      SampleLattice coarse = L;
      coarse.simplex_mesh = std::min<std::size_t>(L.simplex_mesh, 4);
      coarse.q_points = std::min<std::size_t>(L.q_points, 5);
      const auto rows = check_rate_convergence(s.rate, s.Ns, s.r, coarse, std::max(1.0, s.T));
      ConditionReport rep;
      rep.id = "rate-convergence";
      std::ostringstream note;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        note << (k ? " " : "") << "N=" << rows[k].N << ":" << format_double(rows[k].sup_distance);
        if (k > 0 && rows[k].sup_distance > rows[k - 1].sup_distance) {
          rep.pass = false;
          rep.witness = Witness{0.0, {}, 0.0, rows[k].sup_distance};
        }
      }
      rep.measured = rows.back().sup_distance;
      rep.note = "sup d_U by N: " + note.str();
      reports.push_back(rep);
    }

    {
      std::vector<std::pair<std::int64_t, PriceMechanism>> mechs;
      for (std::int64_t N : s.Ns) mechs.emplace_back(N, s.mech_N(N));
      const auto rows = check_phi_psi_convergence(mechs, s.mech, s.r, L);
      ConditionReport rep;
      rep.id = "phi-psi-convergence";
      rep.pass = is_non_increasing(rows);
      rep.measured = std::max(rows.back().sup_phi, rows.back().sup_psi);
      std::ostringstream note;
      for (std::size_t k = 0; k < rows.size(); ++k)
        note << (k ? " " : "") << "N=" << rows[k].N << ":" << format_double(rows[k].sup_phi) << "/"
             << format_double(rows[k].sup_psi);
      rep.note = "sup |phi_N-phi|/|psi_N-psi| by N: " + note.str();
      if (!rep.pass) rep.witness = Witness{0.0, {}, 0.0, rep.measured};
      reports.push_back(rep);
    }

    auto growth = [&](const std::string& id, const ScalarField& f) {
      const GrowthFit fit = check_growth_bound(f, s.r, L);
      ConditionReport rep;
      rep.id = id;
      rep.pass = fit.max_violation <= 0.0;
      rep.measured = fit.C;
      rep.note = "C=" + format_double(fit.C) + " lambda=" + format_double(fit.lambda) + (fit.lifted ? " (lifted)" : "");
      if (!rep.pass) rep.witness = Witness{0.0, {}, 0.0, fit.max_violation};
      reports.push_back(rep);
    };
    growth("growth-A", [&](double t, const SimplexPoint& x, double q) { return s.rate(t, x, q).entries().norm(); });
    growth("growth-phi", s.mech.phi);
    growth("growth-psi", s.mech.psi);

    {
      const DriftField d{s.rate, s.mech};
      const double lip = estimate_lipschitz(d, s.T, L.q_lo, L.q_hi, s.r, cfg_.checks.lipschitz_samples, s.seed);
      ConditionReport rep;
      rep.id = "lipschitz";
      rep.measured = lip;
      rep.pass = std::isfinite(lip);
      rep.note = "empirical Lipschitz constant of the drift";
      if (!rep.pass) rep.witness = Witness{0.0, {}, 0.0, lip};
      reports.push_back(rep);
    }

    if (cfg_.lux) reports.push_back(semi_lipschitz());

    if (s.coefficient_bound) {
      ConditionReport rep;
      rep.id = "containment";
      rep.measured = 0.0;
      for (std::int64_t N : s.Ns) {
        const Trajectory path = simulate_market(s, N, 0);
        std::vector<double> q;
        for (const auto& st : path.states()) q.push_back(st.q);
        ConditionReport one = check_containment_bound(q, s.q0, *s.coefficient_bound, N);
        rep.measured = std::max(rep.measured, one.measured);
        if (!one.pass && rep.pass) {
          rep.pass = false;
          rep.witness = one.witness;
          rep.note = "N=" + std::to_string(N);
        }
      }
      if (rep.pass) rep.note = "C_T=" + format_double(*s.coefficient_bound);
      reports.push_back(rep);
    }
    return reports;
  }

  ConditionReport semi_lipschitz() {
    const Scenario& s = cfg_.scenario;
    const auto points = simplex_lattice(3, std::min<std::size_t>(cfg_.checks.lattice.simplex_mesh, 6));
    std::vector<PathPair> pairs;
    const double T = s.T;
    auto segment = [T](SimplexPoint a, SimplexPoint b) -> lux3::SimplexPath {
      return [a, b, T](double t) {
        const double w = t / T;
        std::vector<double> x(3);
        for (std::size_t i = 0; i < 3; ++i) x[i] = (1.0 - w) * a[i] + w * b[i];
        return SimplexPoint(std::move(x), kIntegratedSimplexTol);
      };
    };
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t j = (i * 7 + 3) % points.size();
      const std::size_t k = (i * 5 + 1) % points.size();
      pairs.push_back({segment(points[i], points[j]), segment(points[k], points[i])});
    }
    ConditionReport rep;
    rep.id = "semi-lipschitz";
    const SemiLipschitzEstimate est = estimate_semi_lipschitz_M(*cfg_.lux, pairs, s.q0, T);
    rep.measured = est.M;
    rep.pass = std::isfinite(est.M) && !est.near_degenerate;
    rep.note = "M estimate; min |h_x| = " + format_double(est.min_abs_denominator);
    if (!rep.pass) rep.witness = Witness{0.0, {}, 0.0, est.M};
    return rep;
  }

  Options opt_;
  std::ostream& out_;
  ScenarioConfig cfg_;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interacting-agent feedback market: simulation, fluid limit and checks", "feedback_market"};
  app.require_subcommand(1);
  Options opt;
  std::string command;

  auto add_common = [&](CLI::App* sub, bool with_n) {
    sub->add_option("--scenario", opt.scenario, "Scenario file")->required();
    if (with_n) sub->add_option("--n", opt.n, "Population size");
    sub->add_option("--out", opt.out_dir, "Output directory");
    sub->add_option("--seed", opt.seed, "Seed (overrides the scenario file)");
    sub->add_flag("--quiet", opt.quiet, "Suppress progress lines");
    sub->callback([&command, sub] { command = sub->get_name(); });
  };
  add_common(app.add_subcommand("simulate", "Simulate the N-agent market and write trajectories"), true);
  add_common(app.add_subcommand("limit", "Integrate the fluid limit and write its trajectory"), false);
  add_common(app.add_subcommand("converge", "Run the convergence study and write its table"), true);
  add_common(app.add_subcommand("fixedpoint", "Find stationary points of the three-type market"), false);
  add_common(app.add_subcommand("check", "Run the condition checkers"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    Runner runner(opt, out);
    if (command == "simulate")
      runner.simulate();
    else if (command == "limit")
      runner.limit();
    else if (command == "converge")
      runner.converge();
    else if (command == "fixedpoint")
      runner.fixedpoint();
    else
      runner.check();
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace fbm::cli
