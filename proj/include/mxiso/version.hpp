#pragma once

namespace mxiso {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kGenerator = "mxiso 1.0.0";

}  // namespace mxiso
