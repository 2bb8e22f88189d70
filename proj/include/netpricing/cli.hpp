#pragma once

#include <string>
#include <vector>

namespace netpricing {

// Runs the command line given argv-style arguments (program name excluded).
// Exit codes: 0 success, 1 failed verification verdict, 2 schema/usage
// violation, 3 solver failure.
int cli_run(const std::vector<std::string>& args);

}  // namespace netpricing
