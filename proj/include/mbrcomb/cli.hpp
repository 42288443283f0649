#pragma once

#include <iosfwd>

namespace mbrcomb::cli {

inline constexpr const char* kVersion = "0.1.0";

// Entry point of the mbrcomb tool. Exit codes: 0 success, 1 runtime or I/O
// failure, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mbrcomb::cli
