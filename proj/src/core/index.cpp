#include "warp/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "binary_io.hpp"
#include "warp/error.hpp"

namespace warp {

namespace {

constexpr int kIndexVersion = 1;

void check_bits(int bits) {
  if (bits != 2 && bits != 4) {
    fail(ErrorCode::kInvalidArgument, "b must be 2 or 4, got " + std::to_string(bits));
  }
}

// Linear interpolation between order statistics (numpy's default rule).
float quantile(const std::vector<float>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return static_cast<float>(sorted[lo] + frac * (static_cast<double>(sorted[hi]) - sorted[lo]));
}

// Forces strictly ascending boundaries and representatives inside
// [boundaries[i-1], boundaries[i]) so quantize(representatives[i]) == i.
void repair_buckets(BucketWeights& w) {
  constexpr float kInf = std::numeric_limits<float>::infinity();
  for (std::size_t i = 1; i < w.boundaries.size(); ++i) {
    if (!(w.boundaries[i] > w.boundaries[i - 1])) {
      w.boundaries[i] = std::nextafter(w.boundaries[i - 1], kInf);
    }
  }
  for (std::size_t i = 0; i < w.representatives.size(); ++i) {
    float& r = w.representatives[i];
    if (i > 0) r = std::max(r, w.boundaries[i - 1]);
    if (i < w.boundaries.size()) r = std::min(r, std::nextafter(w.boundaries[i], -kInf));
  }
}

std::filesystem::path file_in(const std::filesystem::path& dir, const char* name) {
  return dir / name;
}

template <class T>
void write_array(const std::filesystem::path& path, std::span<const T> values) {
  detail::BinaryWriter out(path);
  out.array<T>(values);
  out.close();
}

template <class T>
std::vector<T> read_array(const std::filesystem::path& path, std::size_t count, const char* what) {
  const auto size = detail::file_size(path);
  if (size != count * sizeof(T)) {
    fail(ErrorCode::kSizeMismatch, std::string(what) + " length mismatch: expected " +
                                       std::to_string(count * sizeof(T)) + " bytes, found " +
                                       std::to_string(size));
  }
  detail::BinaryReader in(path);
  return in.array<T>(count, ErrorCode::kSizeMismatch);
}

}  // namespace

void IndexConfig::validate() const {
  check_bits(bits);
  if (n_centroids && *n_centroids < 1) fail(ErrorCode::kInvalidArgument, "n_centroids must be >= 1");
  if (kmeans_iters < 1) fail(ErrorCode::kInvalidArgument, "kmeans_iters must be >= 1");
  if (sample_factor < 1) fail(ErrorCode::kInvalidArgument, "sample_factor must be >= 1");
}

std::uint8_t BucketWeights::quantize(float value) const noexcept {
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), value);
  return static_cast<std::uint8_t>(it - boundaries.begin());
}

void BucketWeights::validate() const {
  check_bits(bits);
  if (boundaries.size() != n_buckets() - 1 || representatives.size() != n_buckets()) {
    fail(ErrorCode::kSizeMismatch, "bucket weights have the wrong shape for b = " + std::to_string(bits));
  }
  for (float v : boundaries) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite bucket boundary");
  }
  for (float v : representatives) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite bucket representative");
  }
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (!(boundaries[i] > boundaries[i - 1])) {
      fail(ErrorCode::kInvalidArgument, "bucket boundaries are not strictly ascending");
    }
  }
  for (std::size_t i = 0; i < representatives.size(); ++i) {
    const float r = representatives[i];
    if ((i > 0 && r < boundaries[i - 1]) || (i < boundaries.size() && r > boundaries[i])) {
      fail(ErrorCode::kInvalidArgument, "bucket representative " + std::to_string(i) + " lies outside its bin");
    }
  }
}

std::vector<std::uint64_t> CompressedIndex::cluster_sizes() const {
  std::vector<std::uint64_t> sizes(n_centroids());
  for (std::size_t c = 0; c < sizes.size(); ++c) sizes[c] = cluster_size(c);
  return sizes;
}

std::size_t CompressedIndex::total_bytes() const noexcept {
  return centroids.values.size() * sizeof(float) +
         (buckets.boundaries.size() + buckets.representatives.size()) * sizeof(float) +
         cluster_offsets.size() * sizeof(std::uint64_t) + codes.size() +
         doc_ids.size() * sizeof(std::uint32_t);
}

void CompressedIndex::validate() const {
  check_bits(bits);
  if (buckets.bits != bits) fail(ErrorCode::kInvalidArgument, "bucket weights disagree on b");
  buckets.validate();
  const std::size_t k = n_centroids();
  if (k < 1 || centroids.values.size() != k * kDim) {
    fail(ErrorCode::kSizeMismatch, "centroid table must hold K >= 1 rows of 128 floats");
  }
  for (std::size_t c = 0; c < k; ++c) {
    double sq = 0.0;
    for (float v : centroids.row(c)) {
      if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite centroid value");
      sq += static_cast<double>(v) * v;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
      fail(ErrorCode::kNormViolation, "centroid " + std::to_string(c) + " is not unit-norm");
    }
  }
  if (cluster_offsets.size() != k + 1) fail(ErrorCode::kCorruptOffsets, "cluster_offsets must hold K + 1 entries");
  if (cluster_offsets.front() != 0) fail(ErrorCode::kCorruptOffsets, "cluster_offsets must start at 0");
  for (std::size_t c = 0; c < k; ++c) {
    if (cluster_offsets[c + 1] < cluster_offsets[c]) {
      fail(ErrorCode::kCorruptOffsets, "cluster_offsets decrease at cluster " + std::to_string(c));
    }
  }
  if (cluster_offsets.back() != doc_ids.size()) {
    fail(ErrorCode::kCorruptOffsets, "cluster_offsets do not end at n_tokens");
  }
  if (codes.size() != doc_ids.size() * code_bytes_per_token()) {
    fail(ErrorCode::kSizeMismatch, "codes length mismatch");
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto p = cluster_offsets[c]; p < cluster_offsets[c + 1]; ++p) {
      if (doc_ids[p] >= n_docs) fail(ErrorCode::kOutOfRange, "doc id out of range");
      if (p > cluster_offsets[c] && doc_ids[p] < doc_ids[p - 1]) {
        fail(ErrorCode::kCorruptOffsets, "doc ids unsorted within cluster " + std::to_string(c));
      }
    }
  }
}

void pack_codes(std::span<const std::uint8_t> codes, int bits, std::span<std::uint8_t> out) {
  check_bits(bits);
  const std::size_t per_byte = 8 / static_cast<std::size_t>(bits);
  if (out.size() * per_byte < codes.size()) fail(ErrorCode::kSizeMismatch, "pack_codes: output too small");
  std::fill(out.begin(), out.end(), std::uint8_t{0});
  const unsigned mask = (1u << bits) - 1u;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const unsigned shift = static_cast<unsigned>((i % per_byte) * static_cast<std::size_t>(bits));
    out[i / per_byte] |= static_cast<std::uint8_t>((codes[i] & mask) << shift);
  }
}

std::vector<std::uint8_t> unpack_codes(std::span<const std::uint8_t> packed, int bits, std::size_t n) {
  check_bits(bits);
  const std::size_t per_byte = 8 / static_cast<std::size_t>(bits);
  if (packed.size() * per_byte < n) {
    fail(ErrorCode::kSizeMismatch, "unpack_codes: need " + std::to_string((n + per_byte - 1) / per_byte) +
                                       " bytes, got " + std::to_string(packed.size()));
  }
  const unsigned mask = (1u << bits) - 1u;
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned shift = static_cast<unsigned>((i % per_byte) * static_cast<std::size_t>(bits));
    out[i] = static_cast<std::uint8_t>((packed[i / per_byte] >> shift) & mask);
  }
  return out;
}

BucketWeights compute_bucket_weights(std::span<const float> residuals, int bits) {
  check_bits(bits);
  const std::size_t n_buckets = std::size_t{1} << bits;
  std::vector<float> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t n_distinct = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size() && n_distinct < n_buckets; ++i) {
    if (sorted[i] != sorted[i - 1]) ++n_distinct;
  }
  if (n_distinct < n_buckets) {
    fail(ErrorCode::kDegenerateSample, "residual sample has fewer than " + std::to_string(n_buckets) +
                                           " distinct values");
  }

  BucketWeights w;
  w.bits = bits;
  const double denom = static_cast<double>(n_buckets);
  for (std::size_t i = 1; i < n_buckets; ++i) w.boundaries.push_back(quantile(sorted, i / denom));
  for (std::size_t i = 0; i < n_buckets; ++i) w.representatives.push_back(quantile(sorted, (i + 0.5) / denom));
  repair_buckets(w);
  return w;
}

BucketWeights uniform_bucket_weights(float lo, float hi, int bits) {
  check_bits(bits);
  if (!(hi > lo)) fail(ErrorCode::kDegenerateSample, "uniform buckets need hi > lo");
  const std::size_t n_buckets = std::size_t{1} << bits;
  const double width = (static_cast<double>(hi) - lo) / static_cast<double>(n_buckets);
  BucketWeights w;
  w.bits = bits;
  for (std::size_t i = 1; i < n_buckets; ++i) w.boundaries.push_back(static_cast<float>(lo + width * i));
  for (std::size_t i = 0; i < n_buckets; ++i) w.representatives.push_back(static_cast<float>(lo + width * (i + 0.5)));
  repair_buckets(w);
  return w;
}

CompressedIndex assign_and_compress(const EmbeddingCollection& collection,
                                    const CentroidTable& centroids, const BucketWeights& weights,
                                    int bits) {
  check_bits(bits);
  if (weights.bits != bits) fail(ErrorCode::kInvalidArgument, "bucket weights were built for a different b");
  const std::size_t k = centroids.size();
  const std::size_t n_tokens = collection.n_tokens();
  const auto assignment = assign_to_centroids(collection.vectors, centroids);

  CompressedIndex index;
  index.bits = bits;
  index.n_docs = collection.n_docs();
  index.centroids = centroids;
  index.buckets = weights;

  index.cluster_offsets.assign(k + 1, 0);
  for (auto c : assignment) ++index.cluster_offsets[c + 1];
  for (std::size_t c = 0; c < k; ++c) index.cluster_offsets[c + 1] += index.cluster_offsets[c];

  const std::size_t stride = index.code_bytes_per_token();
  index.codes.assign(n_tokens * stride, 0);
  index.doc_ids.assign(n_tokens, 0);
  std::vector<std::uint64_t> cursor(index.cluster_offsets.begin(), index.cluster_offsets.end() - 1);
  std::array<std::uint8_t, kDim> token_codes{};

  // Tokens are visited in (doc, token) order, so each cluster fills with
  // ascending doc ids.
  for (std::size_t doc = 0; doc < collection.n_docs(); ++doc) {
    for (auto t = collection.doc_offsets[doc]; t < collection.doc_offsets[doc + 1]; ++t) {
      const std::uint32_t c = assignment[t];
      const auto x = collection.token(t);
      const auto centroid = centroids.row(c);
      for (std::size_t d = 0; d < kDim; ++d) token_codes[d] = weights.quantize(x[d] - centroid[d]);
      const std::uint64_t pos = cursor[c]++;
      pack_codes(token_codes, bits, std::span(index.codes).subspan(pos * stride, stride));
      index.doc_ids[pos] = static_cast<std::uint32_t>(doc);
    }
  }
  return index;
}

std::array<float, kDim> decompress_explicit(const CompressedIndex& index, std::size_t cluster,
                                            std::size_t position) {
  if (cluster >= index.n_centroids()) {
    fail(ErrorCode::kOutOfRange, "cluster " + std::to_string(cluster) + " >= K");
  }
  if (position >= index.cluster_size(cluster)) {
    fail(ErrorCode::kOutOfRange, "position " + std::to_string(position) + " outside cluster " +
                                     std::to_string(cluster));
  }
  const auto codes = unpack_codes(index.token_codes(index.cluster_offsets[cluster] + position),
                                  index.bits, kDim);
  const auto centroid = index.centroids.row(cluster);
  std::array<float, kDim> out{};
  for (std::size_t d = 0; d < kDim; ++d) out[d] = centroid[d] + index.buckets.representatives[codes[d]];
  return out;
}

CompressedIndex build_index(const EmbeddingCollection& collection, const IndexConfig& config) {
  config.validate();
  validate_collection(collection);
  if (collection.n_docs() == 0) fail(ErrorCode::kInvalidArgument, "cannot index an empty collection");

  const auto sample = sample_training_set(collection, config.seed, config.sample_factor);
  const std::size_t sample_rows = sample.size() / kDim;
  std::size_t k = 0;
  if (config.n_centroids) {
    k = *config.n_centroids;
  } else {
    k = std::min(auto_centroid_count(collection.n_tokens(), config.sample_factor), sample_rows);
  }
  const CentroidTable centroids = train_centroids(sample, k, config.kmeans_iters, config.seed);

  const auto sample_assignment = assign_to_centroids(sample, centroids);
  std::vector<float> residuals(sample.size());
  for (std::size_t i = 0; i < sample_rows; ++i) {
    const auto centroid = centroids.row(sample_assignment[i]);
    for (std::size_t d = 0; d < kDim; ++d) residuals[i * kDim + d] = sample[i * kDim + d] - centroid[d];
  }

  BucketWeights weights;
  try {
    weights = compute_bucket_weights(residuals, config.bits);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateSample) throw;
    // Near-duplicate samples (e.g. one token per cluster) leave too few
    // distinct residuals; spread equal-width bins around the observed range.
    const auto [lo, hi] = std::minmax_element(residuals.begin(), residuals.end());
    constexpr float kPad = 1e-4f;
    weights = uniform_bucket_weights(*lo - kPad, *hi + kPad, config.bits);
  }

  CompressedIndex index = assign_and_compress(collection, centroids, weights, config.bits);
  index.config = config;
  return index;
}

void save_index(const CompressedIndex& index, const std::filesystem::path& dir) {
  index.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::ordered_json meta;
  meta["version"] = kIndexVersion;
  meta["b"] = index.bits;
  meta["K"] = index.n_centroids();
  meta["n_docs"] = index.n_docs;
  meta["n_tokens"] = index.n_tokens();
  meta["seed"] = index.config.seed;
  nlohmann::ordered_json cfg;
  cfg["b"] = index.config.bits;
  if (index.config.n_centroids) {
    cfg["n_centroids"] = *index.config.n_centroids;
  } else {
    cfg["n_centroids"] = "auto";
  }
  cfg["kmeans_iters"] = index.config.kmeans_iters;
  cfg["seed"] = index.config.seed;
  cfg["sample_factor"] = index.config.sample_factor;
  meta["config"] = cfg;

  {
    std::ofstream out(file_in(dir, "meta.json"), std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write meta.json in " + dir.string());
    out << meta.dump(2) << '\n';
    if (!out) fail(ErrorCode::kIo, "write failed: meta.json");
  }
  write_array<float>(file_in(dir, "centroids.f32"), index.centroids.values);
  std::vector<float> buckets(index.buckets.boundaries);
  buckets.insert(buckets.end(), index.buckets.representatives.begin(), index.buckets.representatives.end());
  write_array<float>(file_in(dir, "buckets.f32"), buckets);
  write_array<std::uint64_t>(file_in(dir, "cluster_offsets.u64"), index.cluster_offsets);
  write_array<std::uint8_t>(file_in(dir, "codes.bin"), index.codes);
  write_array<std::uint32_t>(file_in(dir, "doc_ids.u32"), index.doc_ids);
}

CompressedIndex load_index(const std::filesystem::path& dir) {
  nlohmann::json meta;
  {
    std::ifstream in(file_in(dir, "meta.json"));
    if (!in) fail(ErrorCode::kIo, "cannot open " + file_in(dir, "meta.json").string());
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformedHeader, std::string("meta.json: ") + e.what());
    }
  }

  CompressedIndex index;
  std::size_t k = 0;
  std::size_t n_tokens = 0;
  try {
    const int version = meta.at("version").get<int>();
    if (version != kIndexVersion) {
      fail(ErrorCode::kVersionMismatch, "unsupported index version " + std::to_string(version));
    }
    index.bits = meta.at("b").get<int>();
    check_bits(index.bits);
    k = meta.at("K").get<std::size_t>();
    index.n_docs = meta.at("n_docs").get<std::uint64_t>();
    n_tokens = meta.at("n_tokens").get<std::size_t>();
    const auto& cfg = meta.at("config");
    index.config.bits = cfg.at("b").get<int>();
    if (cfg.at("n_centroids").is_string()) {
      index.config.n_centroids.reset();
    } else {
      index.config.n_centroids = cfg.at("n_centroids").get<std::size_t>();
    }
    index.config.kmeans_iters = cfg.at("kmeans_iters").get<std::size_t>();
    index.config.seed = cfg.at("seed").get<std::uint64_t>();
    index.config.sample_factor = cfg.at("sample_factor").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedHeader, std::string("meta.json: ") + e.what());
  }
  if (k < 1) fail(ErrorCode::kMalformedHeader, "meta.json: K must be >= 1");

  const std::size_t n_buckets = std::size_t{1} << index.bits;
  index.centroids.values = read_array<float>(file_in(dir, "centroids.f32"), k * kDim, "centroids");
  auto buckets = read_array<float>(file_in(dir, "buckets.f32"), 2 * n_buckets - 1, "buckets");
  index.buckets.bits = index.bits;
  index.buckets.boundaries.assign(buckets.begin(), buckets.begin() + static_cast<std::ptrdiff_t>(n_buckets - 1));
  index.buckets.representatives.assign(buckets.begin() + static_cast<std::ptrdiff_t>(n_buckets - 1), buckets.end());
  index.cluster_offsets = read_array<std::uint64_t>(file_in(dir, "cluster_offsets.u64"), k + 1, "cluster_offsets");
  index.codes = read_array<std::uint8_t>(file_in(dir, "codes.bin"), n_tokens * index.code_bytes_per_token(), "codes");
  index.doc_ids = read_array<std::uint32_t>(file_in(dir, "doc_ids.u32"), n_tokens, "doc_ids");
  index.validate();
  return index;
}

}  // namespace warp
