#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace specpc::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUnexpected = 1,
    kUsage = 2,
    kValidation = 3,
    kNumerical = 4,
};

/// Runs the `specpc` command line with `args` (excluding the program name).
/// Subcommands: detect, simulate, evaluate.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specpc::cli
