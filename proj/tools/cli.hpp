#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hdqlr::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

/// Parses `args` (without the program name) and runs one of simulate, test,
/// ci, power. Result documents go to `out` unless --out names a file; errors
/// are written to `out` as {"error": {kind, message}} and summarized on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdqlr::cli
