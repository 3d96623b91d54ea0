#pragma once

namespace ictm {

inline constexpr const char* version = "1.0.0";

}  // namespace ictm
