#pragma once

namespace polychain {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace polychain
