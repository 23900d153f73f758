#pragma once

// Command-line front end: validate, sweep, region, dataset, symreg, replay.
//
// Exit codes: 0 success, 1 validation failure, 2 usage / config / IO error.

#include <iosfwd>
#include <string>
#include <vector>

namespace rmtkl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs the tool with argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rmtkl::cli
