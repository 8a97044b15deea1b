#pragma once

namespace fots {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fots
