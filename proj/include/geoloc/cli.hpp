#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace geoloc {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (args[0] is the program name) and returns
/// the process exit code. Normal output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geoloc
