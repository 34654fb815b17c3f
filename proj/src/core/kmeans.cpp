#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "warp/error.hpp"
#include "warp/index.hpp"

namespace warp {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

// Keeps each GEMM block's score matrix around 16 MiB.
constexpr std::size_t kScoreBlockFloats = std::size_t{1} << 22;

float dot(const float* a, const float* b) {
  return Eigen::Map<const Eigen::VectorXf>(a, kDim).dot(Eigen::Map<const Eigen::VectorXf>(b, kDim));
}

struct Assignment {
  std::vector<std::uint32_t> cluster;
  std::vector<float> score;  // inner product with the assigned centroid
};

Assignment assign(std::span<const float> rows, std::span<const float> centroids) {
  const std::size_t n = rows.size() / kDim;
  const std::size_t k = centroids.size() / kDim;
  Assignment out{std::vector<std::uint32_t>(n), std::vector<float>(n)};
  if (n == 0) return out;

  const ConstRowMap c(centroids.data(), static_cast<Eigen::Index>(k), kDim);
  const std::size_t block = std::max<std::size_t>(1, std::min(n, kScoreBlockFloats / k));
  RowMatrix scores;
  for (std::size_t begin = 0; begin < n; begin += block) {
    const std::size_t rows_in_block = std::min(block, n - begin);
    const ConstRowMap x(rows.data() + begin * kDim, static_cast<Eigen::Index>(rows_in_block), kDim);
    scores.noalias() = x * c.transpose();
    for (std::size_t r = 0; r < rows_in_block; ++r) {
      const float* row = scores.data() + r * k;
      std::size_t best = 0;
      for (std::size_t j = 1; j < k; ++j) {
        if (row[j] > row[best]) best = j;  // strict: ties keep the lowest id
      }
      out.cluster[begin + r] = static_cast<std::uint32_t>(best);
      out.score[begin + r] = row[best];
    }
  }
  return out;
}

void normalize_into(const double* sum, float* out) {
  double sq = 0.0;
  for (std::size_t d = 0; d < kDim; ++d) sq += sum[d] * sum[d];
  const double inv = 1.0 / std::sqrt(sq);
  for (std::size_t d = 0; d < kDim; ++d) out[d] = static_cast<float>(sum[d] * inv);
}

std::vector<float> kmeanspp_seed(std::span<const float> sample, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = sample.size() / kDim;
  std::vector<float> centroids(k * kDim);
  std::vector<double> dist(n);
  std::vector<bool> chosen(n, false);

  auto take = [&](std::size_t slot, std::size_t point) {
    chosen[point] = true;
    std::copy_n(sample.data() + point * kDim, kDim, centroids.data() + slot * kDim);
  };

  take(0, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  // For unit vectors ||x - c||^2 = 2 - 2 <x, c>.
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = std::max(0.0, 2.0 - 2.0 * dot(sample.data() + i * kDim, centroids.data()));
  }
  const ConstRowMap x(sample.data(), static_cast<Eigen::Index>(n), kDim);
  Eigen::VectorXf sims(static_cast<Eigen::Index>(n));
  for (std::size_t slot = 1; slot < k; ++slot) {
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      double running = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        running += dist[i];
        if (running > target && dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    if (pick == n) {
      // Remaining points coincide with chosen centroids; fall back to any unchosen point.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    take(slot, pick);
    sims.noalias() = x * Eigen::Map<const Eigen::VectorXf>(centroids.data() + slot * kDim, kDim);
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], std::max(0.0, 2.0 - 2.0 * static_cast<double>(sims[static_cast<Eigen::Index>(i)])));
    }
  }
  return centroids;
}

}  // namespace

std::size_t training_doc_count(std::size_t n_docs, std::size_t sample_factor) {
  const double want = std::ceil(std::sqrt(static_cast<double>(n_docs)) * static_cast<double>(sample_factor));
  return std::min(n_docs, static_cast<std::size_t>(want));
}

std::vector<float> sample_training_set(const EmbeddingCollection& collection, std::uint64_t seed,
                                       std::size_t sample_factor) {
  const std::size_t n_docs = collection.n_docs();
  if (n_docs == 0) fail(ErrorCode::kInvalidArgument, "cannot sample an empty collection");
  const std::size_t count = training_doc_count(n_docs, sample_factor);

  std::vector<std::size_t> docs(n_docs);
  std::iota(docs.begin(), docs.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_docs - 1);
    std::swap(docs[i], docs[pick(rng)]);
  }
  docs.resize(count);
  std::sort(docs.begin(), docs.end());

  std::vector<float> sample;
  for (std::size_t d : docs) {
    const auto begin = collection.vectors.begin() + static_cast<std::ptrdiff_t>(collection.doc_offsets[d] * kDim);
    const auto end = collection.vectors.begin() + static_cast<std::ptrdiff_t>(collection.doc_offsets[d + 1] * kDim);
    sample.insert(sample.end(), begin, end);
  }
  return sample;
}

std::size_t auto_centroid_count(std::size_t n_tokens, std::size_t sample_factor) {
  if (n_tokens == 0) return 1;
  const double target = static_cast<double>(sample_factor) * std::sqrt(static_cast<double>(n_tokens));
  const double exponent = std::round(std::log2(std::max(target, 1.0)));
  const auto k = static_cast<std::size_t>(std::ldexp(1.0, static_cast<int>(exponent)));
  return std::clamp<std::size_t>(k, 1, n_tokens);
}

std::vector<std::uint32_t> assign_to_centroids(std::span<const float> rows,
                                               const CentroidTable& centroids) {
  return assign(rows, centroids.values).cluster;
}

CentroidTable train_centroids(std::span<const float> sample, std::size_t k, std::size_t iters,
                              std::uint64_t seed) {
  const std::size_t n = sample.size() / kDim;
  if (k == 0) fail(ErrorCode::kInvalidArgument, "K must be at least 1");
  if (k > n) {
    fail(ErrorCode::kInvalidArgument,
         "K = " + std::to_string(k) + " exceeds sample size " + std::to_string(n));
  }
  if (iters == 0) fail(ErrorCode::kInvalidArgument, "kmeans_iters must be at least 1");

  std::mt19937_64 rng(seed);
  CentroidTable table{kmeanspp_seed(sample, k, rng)};

  std::vector<std::uint32_t> previous;
  std::vector<double> sums(k * kDim);
  std::vector<std::size_t> counts(k);
  for (std::size_t it = 0; it < iters; ++it) {
    Assignment a = assign(sample, table.values);
    if (a.cluster == previous) break;  // fixed point: further updates are identical

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = a.cluster[i];
      ++counts[c];
      const float* x = sample.data() + i * kDim;
      for (std::size_t d = 0; d < kDim; ++d) sums[c * kDim + d] += x[d];
    }

    // Farthest points (lowest similarity to their own centroid) first.
    std::vector<std::size_t> far;
    std::size_t far_next = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double sq = 0.0;
      for (std::size_t d = 0; d < kDim; ++d) sq += sums[c * kDim + d] * sums[c * kDim + d];
      if (counts[c] > 0 && sq > 0.0) {
        normalize_into(sums.data() + c * kDim, table.values.data() + c * kDim);
        continue;
      }
      if (far.empty()) {
        far.resize(n);
        std::iota(far.begin(), far.end(), std::size_t{0});
        std::stable_sort(far.begin(), far.end(),
                         [&](std::size_t l, std::size_t r) { return a.score[l] < a.score[r]; });
      }
      const std::size_t point = far[far_next++ % n];
      std::copy_n(sample.data() + point * kDim, kDim, table.values.data() + c * kDim);
    }
    previous = std::move(a.cluster);
  }
  return table;
}

}  // namespace warp
