#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memmac::cli {

enum ExitCode : int { kOk = 0, kBadArguments = 2, kNumericFailure = 3, kInfeasible = 4 };

/// Runs one invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memmac::cli
