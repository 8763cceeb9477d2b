#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cigen::cli {

// Exit codes.
inline constexpr int kNoReject = 0;
inline constexpr int kReject = 10;
inline constexpr int kUsage = 64;
inline constexpr int kDataError = 65;
inline constexpr int kIoError = 66;
inline constexpr int kInternal = 70;

// Runs `cigen <args...>` (args excludes the program name) writing normal
// output to `out` and diagnostics to `err`; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cigen::cli
