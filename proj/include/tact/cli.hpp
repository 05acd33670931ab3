#pragma once

#include <string>
#include <vector>

namespace tact::cli {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 2 on usage errors, 1 on runtime failures (with a single
/// machine-readable "error: <category>: <message>" line on stderr).
int dispatch(const std::vector<std::string>& args);

}  // namespace tact::cli
