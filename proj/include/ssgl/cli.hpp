#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ssgl {

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns 0 on success, 1 on a runtime or data error, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssgl
