#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hjbsl {

/// Exit codes of the command-line frontend.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

/// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hjbsl
