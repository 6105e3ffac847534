#pragma once

namespace forge {
inline constexpr const char* kVersion = "0.1.0";
}
