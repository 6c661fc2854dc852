#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace socialforce::cli {

/// Runs one invocation. `args` excludes the program name. Returns the exit
/// code: 0 success, 1 runtime failure or gradcheck over tolerance, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace socialforce::cli
