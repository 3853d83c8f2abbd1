#include "fbm_cli/scenario_file.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fbm/error.hpp"

namespace fbm::cli {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ValidationError(where + ": expected a number, got '" + s + "'");
  return v;
}

template <class Int>
Int to_integer(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  Int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw ValidationError(where + ": expected an integer, got '" + s + "'");
  return v;
}

std::vector<double> to_doubles(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& part : split(s, ",")) out.push_back(to_double(part, where));
  return out;
}

// Section accessor that remembers which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v) throw ValidationError("missing required key " + where(key));
    return *v;
  }
  std::string where(const std::string& key) const { return name_ + "." + key; }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty()) throw ValidationError("nested value under " + where(key));
      if (!used_.count(key)) throw ValidationError("unknown key " + where(key));
    }
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> used_;
};

}  // namespace

lux3::TimeProfile parse_profile(const std::string& text) {
  static const std::regex call(R"(^\s*(linear|sine|exp)\s*\((.*)\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, call)) return lux3::TimeProfile(to_double(text, "profile"));
  const std::string fn = m[1];
  const auto args = to_doubles(m[2], "profile " + fn);
  if (fn == "linear" && args.size() == 2) return lux3::TimeProfile::linear(args[0], args[1]);
  if (fn == "sine" && args.size() == 3) return lux3::TimeProfile::sine(args[0], args[1], args[2]);
  if (fn == "exp" && args.size() == 2) return lux3::TimeProfile::exponential(args[0], args[1]);
  throw ValidationError("profile " + fn + ": wrong number of arguments");
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(text, ";")) {
    if (row.empty()) continue;
    std::vector<double> vals;
    std::string tok;
    std::string normal = row;
    for (char& c : normal)
      if (c == ',') c = ' ';
    std::istringstream in(normal);
    while (in >> tok) vals.push_back(to_double(tok, "matrix"));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ValidationError("matrix: no rows");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ValidationError("matrix: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return a;
}

bool ScenarioConfig::autonomous_rates() const {
  return rate_kind == RateKind::kConstant || (feedback && feedback->amplitude == 0.0);
}

namespace {

Eigen::MatrixXd matrix_key(Section& sec, const std::string& key, std::size_t r, bool required) {
  auto v = required ? std::optional(sec.require(key)) : sec.get(key);
  if (!v) return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  Eigen::MatrixXd a;
  try {
    a = parse_matrix(*v);
  } catch (const ValidationError& e) {
    throw ValidationError(sec.where(key) + ": " + e.what());
  }
  if (a.rows() != static_cast<Eigen::Index>(r) || a.cols() != static_cast<Eigen::Index>(r))
    throw ValidationError(sec.where(key) + ": expected an r x r matrix");
  return a;
}

std::array<lux3::TimeProfile, 3> profile_triple(Section& sec, const std::string& name) {
  std::array<lux3::TimeProfile, 3> out;
  auto list = sec.get(name);
  std::array<std::optional<std::string>, 3> each;
  bool any = false;
  for (int i = 0; i < 3; ++i) {
    each[i] = sec.get(name + std::to_string(i + 1));
    any = any || each[i].has_value();
  }
  if (list && any) throw ValidationError(sec.where(name) + ": give either the list or the indexed keys");
  if (list) {
    const auto v = to_doubles(*list, sec.where(name));
    if (v.size() != 3) throw ValidationError(sec.where(name) + ": expected three values");
    for (int i = 0; i < 3; ++i) out[i] = v[i];
    return out;
  }
  for (int i = 0; i < 3; ++i) {
    const std::string key = name + std::to_string(i + 1);
    if (!each[i]) throw ValidationError("missing required key " + sec.where(key));
    try {
      out[i] = parse_profile(*each[i]);
    } catch (const ValidationError& e) {
      throw ValidationError(sec.where(key) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("scenario file: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  static const std::set<std::string> known{"model", "population", "run", "lux3", "checks"};
  for (const auto& [name, child] : tree) {
    if (!known.count(name)) throw ValidationError("unknown section [" + name + "]");
    if (child.empty() && !child.data().empty()) throw ValidationError("key " + name + " outside any section");
  }
  auto section = [&](const std::string& name) {
    auto it = tree.find(name);
    return Section(name, it == tree.not_found() ? nullptr : &it->second);
  };

  ScenarioConfig cfg;
  Scenario& s = cfg.scenario;

  Section run = section("run");
  s.T = to_double(run.require("T"), run.where("T"));
  if (auto v = run.get("h")) s.h = to_double(*v, run.where("h"));
  if (auto v = run.get("seed")) s.seed = to_integer<std::uint64_t>(*v, run.where("seed"));
  if (auto v = run.get("replicas")) s.replicas = to_integer<std::size_t>(*v, run.where("replicas"));
  run.reject_unknown();

  Section model = section("model");
  const auto r = to_integer<std::size_t>(model.require("r"), model.where("r"));
  if (r < 2) throw ValidationError(model.where("r") + ": must be at least 2");
  s.r = r;
  const std::string rate = model.require("rate");
  if (rate == "constant") {
    cfg.rate_kind = RateKind::kConstant;
    cfg.rate_matrix = matrix_key(model, "rate_matrix", r, true);
    try {
      s.rate = constant_rate_field(cfg.rate_matrix);
    } catch (const ValidationError& e) {
      throw ValidationError(model.where("rate_matrix") + ": " + e.what());
    }
  } else if (rate == "feedback") {
    cfg.rate_kind = RateKind::kFeedback;
    FeedbackRates fr;
    fr.base = matrix_key(model, "rate_base", r, true);
    fr.herd = matrix_key(model, "rate_herd", r, false);
    fr.feedback = matrix_key(model, "rate_feedback", r, false);
    if (auto v = model.get("rate_kappa")) fr.kappa = to_double(*v, model.where("rate_kappa"));
    if (auto v = model.get("rate_q_ref")) fr.q_ref = to_double(*v, model.where("rate_q_ref"));
    if (auto v = model.get("rate_amplitude")) fr.amplitude = to_double(*v, model.where("rate_amplitude"));
    if (auto v = model.get("rate_frequency")) fr.frequency = to_double(*v, model.where("rate_frequency"));
    try {
      fr.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("model feedback rates: ") + e.what());
    }
    s.rate = fr.field();
    cfg.feedback = fr;
  } else {
    throw ValidationError(model.where("rate") + ": expected constant or feedback, got '" + rate + "'");
  }
  const std::string mech = model.require("mechanism");
  if (mech == "lux3") {
    cfg.mechanism_kind = MechanismKind::kLux3;
  } else if (mech == "linear") {
    cfg.mechanism_kind = MechanismKind::kLinear;
    const double phi0 = model.get("phi0") ? to_double(*model.get("phi0"), model.where("phi0")) : 0.0;
    const double psi0 = model.get("psi0") ? to_double(*model.get("psi0"), model.where("psi0")) : 0.0;
    auto coeffs = [&](const std::string& key) {
      auto v = model.get(key);
      std::vector<double> c = v ? to_doubles(*v, model.where(key)) : std::vector<double>(r, 0.0);
      if (c.size() != r) throw ValidationError(model.where(key) + ": expected r values");
      return c;
    };
    const auto phi = coeffs("phi");
    const auto psi = coeffs("psi");
    s.use_mechanism(linear_mechanism(phi0, phi, psi0, psi));
    s.coefficient_bound = linear_mechanism_bound(phi0, phi, psi0, psi);
  } else {
    throw ValidationError(model.where("mechanism") + ": expected lux3 or linear, got '" + mech + "'");
  }
  model.reject_unknown();

  Section pop = section("population");
  for (const auto& part : split(pop.require("N"), ","))
    s.Ns.push_back(to_integer<std::int64_t>(part, pop.where("N")));
  if (auto v = pop.get("initial")) {
    if (*v == "deterministic")
      s.initial = InitialLaw::kDeterministic;
    else if (*v == "multinomial")
      s.initial = InitialLaw::kMultinomial;
    else
      throw ValidationError(pop.where("initial") + ": expected deterministic or multinomial");
  }
  s.x0 = to_doubles(pop.require("x0"), pop.where("x0"));
  if (auto v = pop.get("q0")) s.q0 = to_double(*v, pop.where("q0"));
  pop.reject_unknown();

  Section lux = section("lux3");
  if (cfg.mechanism_kind == MechanismKind::kLux3) {
    if (r != 3) throw ValidationError(model.where("r") + ": the lux3 mechanism needs r = 3");
    lux3::Lux3Params p;
    p.alpha = profile_triple(lux, "alpha");
    p.beta = profile_triple(lux, "beta");
    p.delta = profile_triple(lux, "delta");
    try {
      p.log_f = parse_profile(lux.require("logF"));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()).rfind("missing", 0) == 0 ? e.what()
                                                                           : lux.where("logF") + ": " + e.what());
    }
    if (auto v = lux.get("B_L")) p.denominator_floor = to_double(*v, lux.where("B_L"));
    p.validate_at(0.0);
    p.validate_at(s.T);
    cfg.lux = p;
    lux.reject_unknown();
  } else if (tree.find("lux3") != tree.not_found()) {
    throw ValidationError("section [lux3] given but model.mechanism is not lux3");
  }

  Section checks = section("checks");
  auto& L = cfg.checks.lattice;
  L.T = s.T;
  if (auto v = checks.get("simplex_mesh")) L.simplex_mesh = to_integer<std::size_t>(*v, checks.where("simplex_mesh"));
  if (auto v = checks.get("q_points")) L.q_points = to_integer<std::size_t>(*v, checks.where("q_points"));
  if (auto v = checks.get("q_min")) L.q_lo = to_double(*v, checks.where("q_min"));
  if (auto v = checks.get("q_max")) L.q_hi = to_double(*v, checks.where("q_max"));
  if (auto v = checks.get("t_steps")) L.t_steps = to_integer<std::size_t>(*v, checks.where("t_steps"));
  if (auto v = checks.get("fixedpoint_mesh"))
    cfg.checks.fixedpoint_mesh = to_integer<std::size_t>(*v, checks.where("fixedpoint_mesh"));
  if (auto v = checks.get("fixedpoint_tol")) cfg.checks.fixedpoint_tol = to_double(*v, checks.where("fixedpoint_tol"));
  if (auto v = checks.get("fixedpoint_max_iter"))
    cfg.checks.fixedpoint_max_iter = to_integer<std::int64_t>(*v, checks.where("fixedpoint_max_iter"));
  if (auto v = checks.get("lipschitz_samples"))
    cfg.checks.lipschitz_samples = to_integer<std::size_t>(*v, checks.where("lipschitz_samples"));
  checks.reject_unknown();
  if (L.simplex_mesh == 0 || L.t_steps == 0 || L.q_points == 0 || !(L.q_hi >= L.q_lo))
    throw ValidationError("[checks]: lattice sizes must be positive and q_min <= q_max");

  // C_T needs T, so the lux3 mechanism goes in last.
  if (cfg.lux) s.use_lux3(*cfg.lux);
  s.validate();
  return cfg;
}

ScenarioConfig parse_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

}  // namespace fbm::cli
