#pragma once

namespace bct {
inline constexpr const char* kToolName = "bicontact";
inline constexpr const char* kToolVersion = "0.1.0";
}  // namespace bct
