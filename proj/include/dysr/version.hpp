#pragma once

namespace dysr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dysr
