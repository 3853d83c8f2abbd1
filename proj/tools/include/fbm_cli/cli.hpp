#pragma once

#include <iosfwd>

namespace fbm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Entry point of the feedback_market tool. Diagnostics go to `err`,
/// progress lines to `out` unless --quiet is given.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fbm::cli
