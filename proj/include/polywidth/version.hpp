#pragma once

namespace polywidth {

inline constexpr const char* artifact_name = "polywidth";
inline constexpr const char* artifact_version = "1.0.0";

}  // namespace polywidth
