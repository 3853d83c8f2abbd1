#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fbm/conditions.hpp"
#include "fbm/harness.hpp"
#include "fbm/lux3.hpp"
#include "fbm/types.hpp"

namespace fbm::cli {

/// Shortest decimal text with 17 significant digits; round-trips exactly.
std::string format_double(double v);

/// CSV with header t,x1,...,xr,q and one row per grid point.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory(const std::filesystem::path& path);

/// One JSON object per line: {"N", "replicas", "mean_sup_error", "std_error"}.
void write_table(const ConvergenceTable& table, const std::filesystem::path& path);
ConvergenceTable read_table(const std::filesystem::path& path);

/// One JSON object per line per fixed point; infinite q0 is written as the
/// string "+inf" or "-inf".
void write_fixed_points(const std::vector<lux3::FixedPointResult>& points, const std::filesystem::path& path);

/// Block of `key = value` lines headed by [condition <id>].
std::string format_report(const ConditionReport& report);

/// Writes `text` to `path`, reporting failures with the path.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fbm::cli
