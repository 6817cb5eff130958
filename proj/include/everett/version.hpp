#pragma once

namespace everett {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace everett
