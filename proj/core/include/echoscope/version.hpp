#pragma once

namespace echoscope {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace echoscope
