#pragma once

namespace slv {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kTraceFormatVersion = 1;

}  // namespace slv
