#pragma once

#include <iosfwd>

namespace chainid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `chainid` tool. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace chainid::cli
