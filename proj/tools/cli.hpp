#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace corrgan::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage, 3 invalid configuration or data, 4 I/O.
enum ExitCode : int { ok = 0, failure = 1, usage = 2, invalid = 3, io_failure = 4 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace corrgan::cli
