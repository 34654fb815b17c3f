#pragma once

// Two-stage reduction of per-(token, cluster) strides into document scores,
// top-k selection, and a dense brute-force scorer used as a test oracle.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "warp/index.hpp"
#include "warp/kernel.hpp"
#include "warp/score.hpp"
#include "warp/select.hpp"

namespace warp {

struct ScoredDoc {
  std::uint32_t doc = 0;
  float score = 0.0f;

  bool operator==(const ScoredDoc&) const = default;
};

/// Descending score, ties by ascending doc id.
using RankedResults = std::vector<ScoredDoc>;

/// Strict weak order: true when `a` ranks ahead of `b`.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) noexcept {
  return a.score > b.score || (a.score == b.score && a.doc < b.doc);
}

/// One stride per query token, stride i covering token i.
using TokenStrideSet = std::vector<Stride>;

/// Key union; shared keys take the max.
void merge_max_into(const Stride& lhs, const Stride& rhs, Stride& out);
Stride merge_max(const Stride& lhs, const Stride& rhs);

/// Max-merges a token's probe strides pairwise over a balanced tree.
Stride reduce_token_level(std::span<const Stride> strides);
/// In-place variant; `strides` and `scratch` are left in an unspecified state.
Stride reduce_token_level(std::vector<Stride>& strides, std::vector<Stride>& scratch);

/// Stride over the contiguous token range [first, last], values in fixed point.
struct CoveredStride {
  std::size_t first = 0;
  std::size_t last = 0;
  std::vector<std::uint32_t> keys;
  std::vector<FixedScore> values;
};

CoveredStride cover_token(const Stride& stride, std::size_t token);

/// Merges lhs = [i, k] with rhs = [k + 1, j]: shared keys add; a key missing
/// on one side takes that side's summed missing-similarity estimates.
/// Throws kInvalidArgument unless the ranges are adjacent.
void merge_document_into(const CoveredStride& lhs, const CoveredStride& rhs,
                         const MissingEstimates& missing, CoveredStride& out);

enum class MergeTree { kBalanced, kLeftLeaning, kRightLeaning };

/// Sum-merges token strides into document scores. All tree shapes give
/// bit-identical output.
Stride reduce_document_level(std::span<const Stride> token_strides, const MissingEstimates& missing,
                             MergeTree tree = MergeTree::kBalanced);

/// The k best entries via a bounded min-heap, in RankedResults order.
RankedResults top_k(const Stride& stride, std::size_t k);

/// Materializes the dense candidate x query-token matrix from explicitly
/// decompressed vectors: retrieved entries take the max similarity, the rest
/// the token's missing estimate. Returns every candidate, ranked.
RankedResults oracle_score(const CompressedIndex& index, const QueryEmbeddings& query,
                           const ProbePlan& plan);

}  // namespace warp
