#pragma once

namespace fphi {

inline constexpr int version_major = 0;
inline constexpr int version_minor = 1;
inline constexpr int version_patch = 0;
inline constexpr const char* version_string = "0.1.0";

// Checkpoint container version (16-bit field in the binary header).
inline constexpr unsigned checkpoint_version = 1;

} // namespace fphi
