#pragma once

#include <iosfwd>

namespace ace::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `ace` invocation. Returns 0 on success, 1 on a validation or
/// domain error, 2 on a usage error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ace::cli
