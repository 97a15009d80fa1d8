#pragma once

namespace fshap {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fshap
