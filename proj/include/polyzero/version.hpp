#pragma once

namespace polyzero {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace polyzero
