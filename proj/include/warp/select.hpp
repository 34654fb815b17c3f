#pragma once

// Candidate generation: query-centroid scores, probe selection and
// missing-similarity estimates from cumulative cluster sizes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "warp/corpus.hpp"
#include "warp/index.hpp"
#include "warp/score.hpp"

namespace warp {

inline constexpr std::size_t kDefaultProbes = 32;
inline constexpr std::uint64_t kDefaultTPrimeMax = 100'000;

struct SearchParams {
  std::size_t n_probe = kDefaultProbes;
  std::optional<std::uint64_t> t_prime;  // nullopt = auto
  std::uint64_t t_prime_max = kDefaultTPrimeMax;
  std::size_t k = 10;
  std::size_t threads = 1;

  /// Throws kInvalidArgument unless 1 <= n_probe <= n_centroids, k >= 1,
  /// t_prime >= 1 when explicit, t_prime_max >= 1 and threads >= 1.
  void validate(std::size_t n_centroids) const;
};

/// Row-major n_tokens x K matrix of <q_i, C_c>.
struct CentroidScores {
  std::size_t n_tokens = 0;
  std::size_t n_centroids = 0;
  std::vector<float> values;

  [[nodiscard]] std::span<const float> row(std::size_t token) const {
    return std::span(values).subspan(token * n_centroids, n_centroids);
  }
};

CentroidScores score_centroids(const QueryEmbeddings& query, const CentroidTable& centroids);

/// min(t_prime_max, max(1, round(sqrt(n_tokens)))).
std::uint64_t compute_tprime(std::uint64_t n_tokens, std::uint64_t t_prime_max);

struct ProbeSelection {
  std::vector<std::uint32_t> ids;  // descending score, ties by ascending id
  std::vector<float> scores;
  float missing = 0.0f;   // m_i
  std::size_t walked = 0; // centroids popped from the selection heap
};

/// Walks centroids in descending score order only as far as needed: the
/// first n_probe become probes and m is the score at which the running
/// cluster-size total first exceeds t_prime (or the minimum score when it
/// never does).
ProbeSelection select_probes(std::span<const float> scores_row,
                             std::span<const std::uint64_t> cluster_sizes, std::size_t n_probe,
                             std::uint64_t t_prime);

/// m_i per query token and their fixed-point prefix sums.
class MissingEstimates {
 public:
  MissingEstimates() = default;
  explicit MissingEstimates(std::vector<float> values);

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] const std::vector<float>& values() const noexcept { return values_; }
  /// prefix(j) = m_0 + ... + m_{j-1}; prefix(0) = 0.
  [[nodiscard]] FixedScore prefix(std::size_t j) const { return prefix_.at(j); }
  /// Sum of m over the inclusive token range [first, last].
  [[nodiscard]] FixedScore sum(std::size_t first, std::size_t last) const {
    return prefix_.at(last + 1) - prefix_.at(first);
  }

 private:
  std::vector<float> values_;
  std::vector<FixedScore> prefix_{0};
};

struct ProbePlan {
  CentroidScores scores;
  std::vector<ProbeSelection> tokens;
  MissingEstimates missing;
  std::uint64_t t_prime = 0;
  std::uint64_t centroid_scores_computed = 0;
};

ProbePlan plan(const QueryEmbeddings& query, const CompressedIndex& index, const SearchParams& params);

}  // namespace warp
