#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "warp/corpus.hpp"

namespace warp {

struct RunEntry {
  std::string docid;
  double score = 0.0;
};

/// qid -> entries in rank order.
using Run = std::map<std::string, std::vector<RunEntry>>;

/// Four-column TSV: qid, docid, 1-based rank, score.
Run parse_run(std::istream& in);
Run load_run(const std::filesystem::path& path);

struct QueryMetrics {
  std::string qid;
  std::vector<double> recall;  // aligned with MetricSet::cutoffs
  double success_at_5 = 0.0;
  double ndcg_at_10 = 0.0;
};

struct MetricSet {
  std::vector<std::size_t> cutoffs;
  std::vector<QueryMetrics> per_query;
  std::vector<double> mean_recall;
  double mean_success_at_5 = 0.0;
  double mean_ndcg_at_10 = 0.0;
};

/// Recall@k, Success@5 and nDCG@10 (linear gain, log2 discount) over the run
/// queries that have at least one relevant (grade > 0) judgment. Throws
/// kNoJudgedQueries when none do.
MetricSet evaluate(const Run& run, const Qrels& qrels, std::span<const std::size_t> cutoffs);

void write_metrics_table(std::ostream& out, const MetricSet& metrics);

}  // namespace warp
