#pragma once

namespace mclink {
inline constexpr const char* kVersion = "0.1.0";
}
