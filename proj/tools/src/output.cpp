#include "fbm_cli/output.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fbm/error.hpp"

namespace fbm::cli {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("format_double: buffer too small");
  return std::string(buf, ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error("write to " + path.string() + " failed");
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError(path.string() + ": bad number '" + s + "'");
  return v;
}

}  // namespace

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  std::string text = "t";
  const std::size_t r = traj.types();
  for (std::size_t i = 1; i <= r; ++i) text += ",x" + std::to_string(i);
  text += ",q\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    text += format_double(traj.grid()[k]);
    for (std::size_t i = 0; i < r; ++i) text += "," + format_double(traj[k].x[i]);
    text += "," + format_double(traj[k].q) + "\n";
  }
  write_text(path, text);
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,", 0) != 0) throw ValidationError(path.string() + ": missing header");
  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) v.push_back(parse_double(cell, path));
    if (v.size() < 4) throw ValidationError(path.string() + ": short row");
    std::vector<double> x(v.begin() + 1, v.end() - 1);
    traj.push_back(v.front(), MarketState{SimplexPoint(std::move(x), kIntegratedSimplexTol), v.back()});
  }
  return traj;
}

void write_table(const ConvergenceTable& table, const std::filesystem::path& path) {
  std::string text;
  for (const auto& row : table.rows) {
    nlohmann::ordered_json j;
    j["N"] = row.N;
    j["replicas"] = row.replicas;
    j["mean_sup_error"] = row.mean_sup_error;
    j["std_error"] = row.std_error;
    text += j.dump() + "\n";
  }
  write_text(path, text);
}

ConvergenceTable read_table(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  ConvergenceTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ConvergenceRow row;
      row.N = j.at("N").get<std::int64_t>();
      row.replicas = j.at("replicas").get<std::size_t>();
      row.mean_sup_error = j.at("mean_sup_error").get<double>();
      row.std_error = j.at("std_error").get<double>();
      table.rows.push_back(row);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  return table;
}

void write_fixed_points(const std::vector<lux3::FixedPointResult>& points, const std::filesystem::path& path) {
  std::string text;
  for (const auto& fp : points) {
    nlohmann::ordered_json j;
    j["x0"] = std::vector<double>(fp.x0.coords().begin(), fp.x0.coords().end());
    if (std::isfinite(fp.q0))
      j["q0"] = fp.q0;
    else
      j["q0"] = fp.q0 > 0 ? "+inf" : "-inf";
    j["residual_A"] = fp.residual_A;
    if (fp.residual_g)
      j["residual_g"] = *fp.residual_g;
    else
      j["residual_g"] = nullptr;
    j["iterations"] = fp.iterations;
    j["newton_polished"] = fp.newton_polished;
    j["interior"] = fp.interior();
    j["within_hypotheses"] = fp.within_hypotheses;
    text += j.dump() + "\n";
  }
  write_text(path, text);
}

std::string format_report(const ConditionReport& report) {
  std::string s = "[condition " + report.id + "]\n";
  s += std::string("pass = ") + (report.pass ? "true" : "false") + "\n";
  s += "measured = " + format_double(report.measured) + "\n";
  if (report.witness) {
    const auto& w = *report.witness;
    s += "witness_t = " + format_double(w.t) + "\n";
    if (!w.x.empty()) {
      s += "witness_x = ";
      for (std::size_t i = 0; i < w.x.size(); ++i) s += (i ? "," : "") + format_double(w.x[i]);
      s += "\n";
    }
    s += "witness_q = " + format_double(w.q) + "\n";
    s += "witness_value = " + format_double(w.value) + "\n";
  }
  if (!report.note.empty()) s += "note = " + report.note + "\n";
  return s;
}

}  // namespace fbm::cli
