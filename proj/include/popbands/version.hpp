#pragma once

namespace popbands {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace popbands
