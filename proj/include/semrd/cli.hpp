#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace semrd {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Runs one command. `args` excludes the program name. CSV/JSON payloads go
/// to `out` unless --out is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semrd
