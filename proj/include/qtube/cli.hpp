#pragma once

#include <string>
#include <vector>

namespace qtube {

/// Run the command line given argv-style arguments (program name excluded).
/// Returns the process exit status: 0 ok, 1 failed verification, 2 bad
/// arguments or config.
int dispatch(const std::vector<std::string>& args);

} // namespace qtube
