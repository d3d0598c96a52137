#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nvqrng::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kChecksFailed = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kInputError = 3;
inline constexpr int kFitFailed = 4;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace nvqrng::cli
