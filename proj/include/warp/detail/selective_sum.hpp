#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "warp/corpus.hpp"

namespace warp::detail {

/// Scores every packed residual of one cluster against one query token and
/// max-reduces consecutive equal doc ids on the fly.
///
/// `upsilon` is the token's 128 x 2^b lookup table. Per candidate the work is
/// table lookups and additions only; the centroid score is added last so the
/// output is exactly fl(centroid_score + residual_sum).
///
/// T is float on the hot path; tests instantiate it with an instrumented
/// scalar to count operations.
template <class T>
void selective_sum(std::span<const std::uint8_t> codes, std::span<const std::uint32_t> doc_ids,
                   int bits, std::span<const T> upsilon, T centroid_score,
                   std::vector<std::uint32_t>& keys, std::vector<T>& values) {
  const std::size_t n = doc_ids.size();
  const std::size_t bytes_per_token = kDim * static_cast<std::size_t>(bits) / 8;
  const T* table = upsilon.data();

  for (std::size_t p = 0; p < n; ++p) {
    const std::uint8_t* c = codes.data() + p * bytes_per_token;
    T a0{}, a1{}, a2{}, a3{};
    if (bits == 4) {
      // Byte j holds dims 2j (low nibble) and 2j + 1 (high nibble).
      for (std::size_t j = 0; j < bytes_per_token; j += 2) {
        const T* row = table + j * 32;
        a0 += row[c[j] & 0x0F];
        a1 += row[16 + (c[j] >> 4)];
        a2 += row[32 + (c[j + 1] & 0x0F)];
        a3 += row[48 + (c[j + 1] >> 4)];
      }
    } else {
      // Byte j holds dims 4j .. 4j + 3, lowest crumb first.
      for (std::size_t j = 0; j < bytes_per_token; ++j) {
        const T* row = table + j * 16;
        const std::uint8_t byte = c[j];
        a0 += row[byte & 0x03];
        a1 += row[4 + ((byte >> 2) & 0x03)];
        a2 += row[8 + ((byte >> 4) & 0x03)];
        a3 += row[12 + (byte >> 6)];
      }
    }
    T residual = a0;
    residual += a1;
    T upper = a2;
    upper += a3;
    residual += upper;
    T score = centroid_score;
    score += residual;

    const std::uint32_t doc = doc_ids[p];
    if (!keys.empty() && keys.back() == doc) {
      if (values.back() < score) values.back() = score;
    } else {
      keys.push_back(doc);
      values.push_back(score);
    }
  }
}

}  // namespace warp::detail
