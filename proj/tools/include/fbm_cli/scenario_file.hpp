#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbm/conditions.hpp"
#include "fbm/harness.hpp"
#include "fbm/lux3.hpp"
#include "fbm/rate_models.hpp"

namespace fbm::cli {

enum class RateKind { kConstant, kFeedback };
enum class MechanismKind { kLux3, kLinear };

struct ChecksConfig {
  SampleLattice lattice;  // T is taken from [run]
  std::size_t fixedpoint_mesh = 8;
  double fixedpoint_tol = 1e-12;
  std::int64_t fixedpoint_max_iter = 20000;
  std::size_t lipschitz_samples = 20000;
};

struct ScenarioConfig {
  Scenario scenario;
  RateKind rate_kind = RateKind::kConstant;
  Eigen::MatrixXd rate_matrix;            // constant rates
  std::optional<FeedbackRates> feedback;  // feedback rates
  MechanismKind mechanism_kind = MechanismKind::kLux3;
  std::optional<lux3::Lux3Params> lux;
  ChecksConfig checks;

  /// True when A does not depend on t.
  bool autonomous_rates() const;
};

/// Parses an INI scenario file. Unknown sections or keys, malformed values
/// and missing required keys raise ValidationError naming section.key.
ScenarioConfig parse_scenario_file(const std::filesystem::path& path);
ScenarioConfig parse_scenario_text(const std::string& text);

/// Time profile syntax: a number, linear(a, b), sine(a, b, w) or exp(a, b).
lux3::TimeProfile parse_profile(const std::string& text);

/// Rows separated by ';', entries by ',' or whitespace.
Eigen::MatrixXd parse_matrix(const std::string& text);

}  // namespace fbm::cli
