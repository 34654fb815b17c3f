#pragma once

// Implicit decompression: candidate scores straight from packed residual
// codes via per-token lookup tables.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "warp/corpus.hpp"
#include "warp/index.hpp"

namespace warp {

/// Sorted, key-unique (doc id, partial score) pairs.
struct Stride {
  std::vector<std::uint32_t> keys;
  std::vector<float> values;

  [[nodiscard]] std::size_t size() const noexcept { return keys.size(); }
  [[nodiscard]] bool empty() const noexcept { return keys.empty(); }
  void clear() noexcept {
    keys.clear();
    values.clear();
  }
  /// Strictly ascending keys and equal lengths.
  [[nodiscard]] bool well_formed() const noexcept;

  bool operator==(const Stride&) const = default;
};

/// upsilon[i][d][w] = q[i][d] * omega[w], one table of 128 x 2^b per query token.
struct Upsilon {
  int bits = 4;
  std::size_t n_tokens = 0;
  std::vector<float> table;

  [[nodiscard]] std::size_t n_buckets() const noexcept { return std::size_t{1} << bits; }
  [[nodiscard]] std::span<const float> token(std::size_t i) const {
    const std::size_t width = kDim * n_buckets();
    return std::span(table).subspan(i * width, width);
  }
  [[nodiscard]] float at(std::size_t i, std::size_t d, std::size_t w) const {
    return table[(i * kDim + d) * n_buckets() + w];
  }
};

Upsilon build_upsilon(const QueryEmbeddings& query, const BucketWeights& weights);

/// Scores every token of `cluster` against query token `token` and returns
/// one stride with the per-document maximum.
Stride score_cluster(const CompressedIndex& index, std::size_t cluster, std::size_t token,
                     float centroid_score, const Upsilon& upsilon);

/// Same as score_cluster, writing into `out` (cleared first) to reuse its buffers.
void score_cluster_into(const CompressedIndex& index, std::size_t cluster, std::size_t token,
                        float centroid_score, const Upsilon& upsilon, Stride& out);

}  // namespace warp
