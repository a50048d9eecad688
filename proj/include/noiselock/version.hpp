#pragma once

namespace noiselock {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace noiselock
