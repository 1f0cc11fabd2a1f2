#pragma once

namespace lcnf {
inline constexpr const char* kVersion = "0.1.0";
}
