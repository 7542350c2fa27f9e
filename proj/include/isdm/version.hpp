#pragma once

namespace isdm {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace isdm
