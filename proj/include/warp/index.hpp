#pragma once

// Compressed residual index: spherical k-means centroids, quantile bucket
// weights, and b-bit packed residual codes stored cluster-contiguously.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "warp/corpus.hpp"

namespace warp {

struct IndexConfig {
  int bits = 4;                                // residual bits per dimension, 2 or 4
  std::optional<std::size_t> n_centroids;      // nullopt = auto
  std::size_t kmeans_iters = 20;
  std::uint64_t seed = 42;
  std::size_t sample_factor = 16;

  void validate() const;
  bool operator==(const IndexConfig&) const = default;
};

/// K x 128 row-major centroid matrix; every row unit-norm.
struct CentroidTable {
  std::vector<float> values;

  [[nodiscard]] std::size_t size() const noexcept { return values.size() / kDim; }
  [[nodiscard]] TokenView row(std::size_t c) const {
    return TokenView(values.data() + c * kDim, kDim);
  }
  bool operator==(const CentroidTable&) const = default;
};

/// Bin edges and per-bin decompression values shared by all dimensions.
struct BucketWeights {
  int bits = 4;
  std::vector<float> boundaries;       // 2^b - 1, strictly ascending
  std::vector<float> representatives;  // 2^b, representatives[i] lies in bin i

  [[nodiscard]] std::size_t n_buckets() const noexcept { return std::size_t{1} << bits; }
  /// Bin of `value`: number of boundaries <= value. Out-of-range values clamp
  /// to the extreme bins.
  [[nodiscard]] std::uint8_t quantize(float value) const noexcept;
  void validate() const;
  bool operator==(const BucketWeights&) const = default;
};

struct CompressedIndex {
  int bits = 4;
  std::uint64_t n_docs = 0;
  CentroidTable centroids;
  BucketWeights buckets;
  std::vector<std::uint64_t> cluster_offsets{0};  // K + 1
  std::vector<std::uint8_t> codes;                // packed, cluster-contiguous
  std::vector<std::uint32_t> doc_ids;             // aligned with codes, sorted within cluster
  IndexConfig config;                             // echo of the build configuration

  [[nodiscard]] std::size_t n_centroids() const noexcept { return centroids.size(); }
  [[nodiscard]] std::size_t n_tokens() const noexcept { return doc_ids.size(); }
  [[nodiscard]] std::size_t code_bytes_per_token() const noexcept {
    return kDim * static_cast<std::size_t>(bits) / 8;
  }
  [[nodiscard]] std::size_t cluster_size(std::size_t c) const {
    return static_cast<std::size_t>(cluster_offsets[c + 1] - cluster_offsets[c]);
  }
  [[nodiscard]] std::vector<std::uint64_t> cluster_sizes() const;
  [[nodiscard]] std::span<const std::uint8_t> token_codes(std::size_t position) const {
    return std::span(codes).subspan(position * code_bytes_per_token(), code_bytes_per_token());
  }
  /// Residual payload in bytes (codes only).
  [[nodiscard]] std::size_t residual_bytes() const noexcept { return codes.size(); }
  /// Bytes of every persisted array (excludes the small meta.json).
  [[nodiscard]] std::size_t total_bytes() const noexcept;

  void validate() const;
  bool operator==(const CompressedIndex&) const = default;
};

// Packing: b-bit codes, low-order bits hold the lower dimension index.
void pack_codes(std::span<const std::uint8_t> codes, int bits, std::span<std::uint8_t> out);
std::vector<std::uint8_t> unpack_codes(std::span<const std::uint8_t> packed, int bits, std::size_t n);

/// Number of documents sampled for centroid training.
std::size_t training_doc_count(std::size_t n_docs, std::size_t sample_factor);

/// Token vectors of ceil(sqrt(n_docs) * sample_factor) documents (capped at
/// n_docs) drawn uniformly without replacement, in ascending doc order.
std::vector<float> sample_training_set(const EmbeddingCollection& collection, std::uint64_t seed,
                                       std::size_t sample_factor = 16);

/// 2^round(log2(sample_factor * sqrt(n_tokens))), clamped to [1, n_tokens].
std::size_t auto_centroid_count(std::size_t n_tokens, std::size_t sample_factor = 16);

/// Spherical k-means from k-means++ seeding. `sample` is row-major n x 128.
CentroidTable train_centroids(std::span<const float> sample, std::size_t k, std::size_t iters,
                              std::uint64_t seed);

/// Nearest (max inner product) centroid per row; ties go to the lowest id.
std::vector<std::uint32_t> assign_to_centroids(std::span<const float> rows,
                                               const CentroidTable& centroids);

/// Empirical quantile buckets over a pooled residual sample.
BucketWeights compute_bucket_weights(std::span<const float> residuals, int bits);

/// Equal-width buckets over [lo, hi] with bin midpoints as representatives.
BucketWeights uniform_bucket_weights(float lo, float hi, int bits);

CompressedIndex assign_and_compress(const EmbeddingCollection& collection,
                                    const CentroidTable& centroids, const BucketWeights& weights,
                                    int bits);

/// C[c] + sum_d e_d * omega[code_d] for the token at `position` inside `cluster`.
std::array<float, kDim> decompress_explicit(const CompressedIndex& index, std::size_t cluster,
                                            std::size_t position);

CompressedIndex build_index(const EmbeddingCollection& collection, const IndexConfig& config);

void save_index(const CompressedIndex& index, const std::filesystem::path& dir);
CompressedIndex load_index(const std::filesystem::path& dir);

}  // namespace warp
