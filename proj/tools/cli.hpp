#pragma once

#include <string>
#include <vector>

namespace owl::cli {

/// Runs one `owl` command line (args exclude the program name).
/// Returns 0 on success, 1 on usage errors, 2 on data errors.
int execute(const std::vector<std::string>& args);

}  // namespace owl::cli
