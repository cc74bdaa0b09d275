#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace clinfom {

// Full command-line surface; the clinfom binary is a thin wrapper around
// this. Returns the process exit code: 0 success, 2 input error, 3 domain
// precondition failure, 4 internal failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clinfom
