#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace trackhdr {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs one subcommand. args excludes the program name. Returns 0 on
// success, 2 on usage errors and 1 on runtime errors (a one-line JSON
// object {"error": <class>, "message": <text>} is written to err).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trackhdr
