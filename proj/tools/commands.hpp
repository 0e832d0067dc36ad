#pragma once

#include <string>
#include <vector>

#include "tvar/bench.hpp"

namespace tvar::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kNumerical = 3 };

/// Entry point of the `tvar` binary. Returns the process exit code.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

/// "1..3x2", "1,2x1..2", "4x5". Throws InputError on an empty or malformed expression.
std::vector<RankPair> parse_grid(const std::string& expr);

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

}  // namespace tvar::cli
