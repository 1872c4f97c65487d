#pragma once

namespace ciwave {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ciwave
