#pragma once

#include <cmath>
#include <cstdint>

namespace warp {

/// Document-level sums are carried in fixed point with 32 fractional bits.
/// Integer addition is associative, so merged scores are bit-identical for
/// every merge-tree shape. Each float is rounded onto the 2^-32 grid exactly
/// once, which keeps the error far below float32 resolution for scores of
/// magnitude <= 2^30.
using FixedScore = std::int64_t;

inline constexpr int kFixedFractionBits = 32;

inline FixedScore to_fixed(float value) noexcept {
  return std::llround(std::ldexp(static_cast<double>(value), kFixedFractionBits));
}

inline float from_fixed(FixedScore value) noexcept {
  return static_cast<float>(std::ldexp(static_cast<double>(value), -kFixedFractionBits));
}

}  // namespace warp
