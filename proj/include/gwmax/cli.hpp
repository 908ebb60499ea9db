#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gwmax::cli {

enum ExitCode : int { ok = 0, verification_failed = 1, invalid_input = 2 };

/// Subcommands maxdeg, sample, oracle, verify. `args` excludes the program
/// name. Data goes to --out (or `out`), diagnostics to `err`. Output files
/// are written only after the computation succeeded.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gwmax::cli
