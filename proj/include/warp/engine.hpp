#pragma once

// End-to-end retrieval over a loaded index: candidate generation,
// decompression + scoring, reduction, top-k.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "warp/corpus.hpp"
#include "warp/index.hpp"
#include "warp/metrics.hpp"
#include "warp/reduce.hpp"
#include "warp/select.hpp"
#include "warp/thread_pool.hpp"

namespace warp {

struct StageTimings {
  double candidate_generation_ms = 0.0;
  double scoring_ms = 0.0;  // decompression + scoring (and token-level reduction when threaded)
  double reduction_ms = 0.0;

  [[nodiscard]] double total_ms() const noexcept {
    return candidate_generation_ms + scoring_ms + reduction_ms;
  }
  StageTimings& operator+=(const StageTimings& other) noexcept;
};

struct QueryReport {
  RankedResults results;
  StageTimings timings;
  std::uint64_t centroid_scores_computed = 0;
  std::uint64_t tokens_scored = 0;  // sum of probed cluster sizes over query tokens
  std::uint64_t candidates = 0;     // documents in the final stride
};

struct SearchReport {
  std::vector<QueryReport> queries;
  StageTimings totals;
};

/// Reusable search context bound to one index. Owns the worker pool; the
/// index must outlive it. Results do not depend on the thread count.
class Searcher {
 public:
  Searcher(const CompressedIndex& index, const SearchParams& params);

  [[nodiscard]] QueryReport search(const QueryEmbeddings& query);
  [[nodiscard]] const SearchParams& params() const noexcept { return params_; }

 private:
  const CompressedIndex& index_;
  SearchParams params_;
  std::unique_ptr<ThreadPool> pool_;
};

QueryReport search(const CompressedIndex& index, const QueryEmbeddings& query, const SearchParams& params);

SearchReport search_batch(const CompressedIndex& index, std::span<const QueryEmbeddings> queries,
                          const SearchParams& params);

/// Run-file rows "qid\tdocid\trank\tscore"; qid is the query's position in
/// the batch, docid the collection document index, score with 6 decimals.
void write_run(std::ostream& out, const SearchReport& report);

/// In-memory Run with the ids and ordering write_run would emit.
Run to_run(const SearchReport& report);

}  // namespace warp
