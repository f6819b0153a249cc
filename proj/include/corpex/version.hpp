#pragma once

namespace corpex {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever the model/report JSON layout changes incompatibly.
inline constexpr int kModelFormatVersion = 1;

}  // namespace corpex
