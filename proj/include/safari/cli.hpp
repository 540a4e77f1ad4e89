#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace safari::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNumeric = 4;

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Thread count from SAFARI_THREADS: unset -> 1, 0 -> hardware concurrency.
std::size_t threads_from_env();

}  // namespace safari::cli
