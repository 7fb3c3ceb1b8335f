#pragma once

namespace dasein {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dasein
