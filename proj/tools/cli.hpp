#pragma once

#include <iosfwd>

namespace valsel::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kDataError = 1;
inline constexpr int kConfigError = 2;

// Runs the command line; diagnostics go to err. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace valsel::cli
