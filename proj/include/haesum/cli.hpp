#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace haesum::cli {

inline constexpr const char* version = "0.1.0";

// Runs one subcommand. `args` excludes the program name. Returns 0 on
// success, 2 on a usage error and 1 on any other failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace haesum::cli
