#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cvkit::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInternalError = 1,
    kFormatError = 2,
    kConsistencyError = 3,
};

/// Runs the `cvkit` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cvkit::cli
