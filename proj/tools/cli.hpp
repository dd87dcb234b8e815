#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rank2s::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kInputError = 2, kInfeasible = 3 };

/// Runs the command line; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rank2s::cli
