#pragma once

#include <string>
#include <vector>

namespace din::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one `din` invocation. `args` excludes the program name.
/// Returns the process exit code; errors are reported on stderr.
int run(const std::vector<std::string>& args);

}  // namespace din::cli
