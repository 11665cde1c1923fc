#pragma once

#include <iosfwd>

namespace sawfilm::cli {

inline constexpr const char* kVersion = "sawfilm 1.0.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUnexpected = 1;
inline constexpr int kExitInput = 2;       // usage, config, CSV, I/O, synthesis setup
inline constexpr int kExitModel = 3;       // forward model found no mode
inline constexpr int kExitExtraction = 4;  // no usable fundamental peak

/// Parses arguments and runs one subcommand. Data goes to `out` unless --out
/// names a file; diagnostics go to `err`. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sawfilm::cli
