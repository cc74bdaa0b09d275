#pragma once

namespace clinfom {

inline constexpr const char* kToolName = "clinfom";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace clinfom
