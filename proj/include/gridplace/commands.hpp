#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridplace {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

// Runs the command line (without the program name). Exit codes: 0 success,
// 2 validation or user error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridplace
