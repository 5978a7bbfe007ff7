#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kdist::cli {

/// Runs the kdist command line. `args` excludes the program name.
/// Returns 0 on success, 1 for usage/config errors, 2 for data errors and
/// 3 for remote-service errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kdist::cli
