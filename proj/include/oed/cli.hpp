#pragma once

#include <iosfwd>

namespace oed::cli {

/// Exit statuses: 0 success, 1 data or validation error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `oed` command line (subcommands select, fit, simulate, report,
/// synth) and returns the exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oed::cli
