#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hmmifs::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 validation error (bad flags, files, configs),
/// 2 numerical failure (impossible observation, non-convergence, FAIL verdict).
enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2 };

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hmmifs::cli
