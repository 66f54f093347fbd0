#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hsrecon::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

/// Runs one subcommand (synth, calibrate, reconstruct, svt-bench, metrics).
/// `args` excludes the program name. Failures print a single line
/// `error: kind=<usage|io|numeric> code=<n> message=<text>` to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hsrecon::cli
