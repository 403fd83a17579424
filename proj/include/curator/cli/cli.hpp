#pragma once

#include <ostream>

namespace curator::cli {

/// Exit codes: 0 success, 1 a command failed, 2 bad usage (unknown command
/// or option).
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `curator <train|calibrate|curate|evaluate|serve> --config FILE [...]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace curator::cli
