#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blowup::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kInvalid = 2;    // bad flags, parse or validation errors
inline constexpr int kNumerical = 3;  // guard trips, non-finite runs, divergent integrals
inline constexpr int kOrdering = 4;   // bench ordering check failed

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blowup::cli
