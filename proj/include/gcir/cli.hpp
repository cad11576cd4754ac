#pragma once

#include <iosfwd>

namespace gcir::cli {

inline constexpr const char* kToolName = "gcir";
inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: 0 success, 1 runtime failure (including a failed compare
/// self-test), 2 usage or configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gcir::cli
