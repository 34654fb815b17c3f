#include "warp/select.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "warp/error.hpp"

namespace warp {

void SearchParams::validate(std::size_t n_centroids) const {
  if (n_probe < 1 || n_probe > n_centroids) {
    fail(ErrorCode::kInvalidArgument, "n_probe must be in [1, " + std::to_string(n_centroids) +
                                          "], got " + std::to_string(n_probe));
  }
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (t_prime && *t_prime < 1) fail(ErrorCode::kInvalidArgument, "t_prime must be >= 1");
  if (t_prime_max < 1) fail(ErrorCode::kInvalidArgument, "t_prime_max must be >= 1");
  if (threads < 1) fail(ErrorCode::kInvalidArgument, "threads must be >= 1");
}

CentroidScores score_centroids(const QueryEmbeddings& query, const CentroidTable& centroids) {
  using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  CentroidScores out;
  out.n_tokens = query.n_tokens();
  out.n_centroids = centroids.size();
  out.values.resize(out.n_tokens * out.n_centroids);
  const Eigen::Map<const RowMatrix> q(query.vectors.data(), static_cast<Eigen::Index>(out.n_tokens), kDim);
  const Eigen::Map<const RowMatrix> c(centroids.values.data(), static_cast<Eigen::Index>(out.n_centroids), kDim);
  Eigen::Map<RowMatrix> s(out.values.data(), static_cast<Eigen::Index>(out.n_tokens),
                          static_cast<Eigen::Index>(out.n_centroids));
  s.noalias() = q * c.transpose();
  return out;
}

std::uint64_t compute_tprime(std::uint64_t n_tokens, std::uint64_t t_prime_max) {
  if (n_tokens < 1) fail(ErrorCode::kInvalidArgument, "compute_tprime: n_tokens must be >= 1");
  const auto root = static_cast<std::uint64_t>(std::llround(std::sqrt(static_cast<double>(n_tokens))));
  return std::min(t_prime_max, std::max<std::uint64_t>(1, root));
}

ProbeSelection select_probes(std::span<const float> scores_row,
                             std::span<const std::uint64_t> cluster_sizes, std::size_t n_probe,
                             std::uint64_t t_prime) {
  const std::size_t k = scores_row.size();
  if (cluster_sizes.size() != k) fail(ErrorCode::kInvalidArgument, "cluster_sizes length != K");
  if (n_probe < 1 || n_probe > k) fail(ErrorCode::kInvalidArgument, "n_probe must be in [1, K]");

  // Max-heap under "better = higher score, then lower id"; popping yields the
  // sorted order lazily.
  auto worse = [&](std::uint32_t a, std::uint32_t b) {
    return scores_row[a] < scores_row[b] || (scores_row[a] == scores_row[b] && a > b);
  };
  std::vector<std::uint32_t> heap(k);
  std::iota(heap.begin(), heap.end(), std::uint32_t{0});
  std::make_heap(heap.begin(), heap.end(), worse);

  ProbeSelection out;
  out.ids.reserve(n_probe);
  out.scores.reserve(n_probe);
  std::uint64_t cumulative = 0;
  bool crossed = false;
  while (!heap.empty() && (out.ids.size() < n_probe || !crossed)) {
    std::pop_heap(heap.begin(), heap.end(), worse);
    const std::uint32_t c = heap.back();
    heap.pop_back();
    ++out.walked;
    const float score = scores_row[c];
    if (out.ids.size() < n_probe) {
      out.ids.push_back(c);
      out.scores.push_back(score);
    }
    if (!crossed) {
      cumulative += cluster_sizes[c];
      out.missing = score;  // ends as the minimum if the threshold is never crossed
      crossed = cumulative > t_prime;
    }
  }
  return out;
}

MissingEstimates::MissingEstimates(std::vector<float> values) : values_(std::move(values)) {
  prefix_.reserve(values_.size() + 1);
  for (float m : values_) prefix_.push_back(prefix_.back() + to_fixed(m));
}

ProbePlan plan(const QueryEmbeddings& query, const CompressedIndex& index, const SearchParams& params) {
  params.validate(index.n_centroids());
  ProbePlan out;
  out.t_prime = params.t_prime ? *params.t_prime
                               : compute_tprime(std::max<std::uint64_t>(1, index.n_tokens()), params.t_prime_max);
  out.scores = score_centroids(query, index.centroids);
  out.centroid_scores_computed = out.scores.values.size();

  const auto sizes = index.cluster_sizes();
  std::vector<float> missing;
  out.tokens.reserve(query.n_tokens());
  for (std::size_t i = 0; i < query.n_tokens(); ++i) {
    out.tokens.push_back(select_probes(out.scores.row(i), sizes, params.n_probe, out.t_prime));
    missing.push_back(out.tokens.back().missing);
  }
  out.missing = MissingEstimates(std::move(missing));
  return out;
}

}  // namespace warp
