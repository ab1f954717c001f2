#pragma once

namespace kdqcm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kdqcm
