#pragma once

namespace rgconf {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace rgconf
