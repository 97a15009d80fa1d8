#pragma once

#include <string>
#include <vector>

namespace fshap::cli {

// Exit codes used by run() and the fshap binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;  // bad flags / parameters
inline constexpr int kExitDataError = 3;    // missing or malformed input files
inline constexpr int kExitNumericError = 4; // numeric / capacity failures

// Runs one subcommand. `args` excludes the program name. All diagnostics go
// to stderr; primary outputs are files named by the flags. Reruns with the
// same flags and seed produce byte-identical primary outputs.
int run(const std::vector<std::string>& args);

}  // namespace fshap::cli
