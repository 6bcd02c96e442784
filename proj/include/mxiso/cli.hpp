#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mxiso::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitVerification = 2;
inline constexpr int kExitResource = 3;

/// args excludes the program name. Results go to `out`, the resolved
/// configuration and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace mxiso::cli
