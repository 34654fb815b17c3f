#include "warp/engine.hpp"

#include <chrono>
#include <cstdio>

#include "warp/error.hpp"
#include "warp/kernel.hpp"

namespace warp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

struct TokenWork {
  std::vector<Stride> probe_strides;
  std::vector<Stride> scratch;
  Stride reduced;
};

void score_token(const CompressedIndex& index, const ProbeSelection& probes, std::size_t token,
                 const Upsilon& upsilon, TokenWork& work) {
  work.probe_strides.resize(probes.ids.size());
  for (std::size_t j = 0; j < probes.ids.size(); ++j) {
    score_cluster_into(index, probes.ids[j], token, probes.scores[j], upsilon, work.probe_strides[j]);
  }
}

void reduce_token(TokenWork& work) {
  work.reduced = reduce_token_level(work.probe_strides, work.scratch);
}

}  // namespace

StageTimings& StageTimings::operator+=(const StageTimings& other) noexcept {
  candidate_generation_ms += other.candidate_generation_ms;
  scoring_ms += other.scoring_ms;
  reduction_ms += other.reduction_ms;
  return *this;
}

Searcher::Searcher(const CompressedIndex& index, const SearchParams& params)
    : index_(index), params_(params) {
  params_.validate(index_.n_centroids());
  if (params_.threads > 1) pool_ = std::make_unique<ThreadPool>(params_.threads);
}

QueryReport Searcher::search(const QueryEmbeddings& query) {
  validate_query(query);
  QueryReport report;
  const std::size_t n = query.n_tokens();

  auto t0 = Clock::now();
  const ProbePlan probe_plan = plan(query, index_, params_);
  report.centroid_scores_computed = probe_plan.centroid_scores_computed;
  report.timings.candidate_generation_ms = elapsed_ms(t0);

  std::vector<TokenWork> work(n);
  t0 = Clock::now();
  const Upsilon upsilon = build_upsilon(query, index_.buckets);
  if (pool_) {
    // Decompression, scoring and token-level reduction fused per task.
    pool_->parallel_for(n, [&](std::size_t i) {
      score_token(index_, probe_plan.tokens[i], i, upsilon, work[i]);
      reduce_token(work[i]);
    });
    report.timings.scoring_ms = elapsed_ms(t0);
    t0 = Clock::now();
  } else {
    for (std::size_t i = 0; i < n; ++i) score_token(index_, probe_plan.tokens[i], i, upsilon, work[i]);
    report.timings.scoring_ms = elapsed_ms(t0);
    t0 = Clock::now();
    for (auto& w : work) reduce_token(w);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t c : probe_plan.tokens[i].ids) report.tokens_scored += index_.cluster_size(c);
  }

  TokenStrideSet token_strides;
  token_strides.reserve(n);
  for (auto& w : work) token_strides.push_back(std::move(w.reduced));
  const Stride documents = reduce_document_level(token_strides, probe_plan.missing);
  report.candidates = documents.size();
  report.results = top_k(documents, params_.k);
  report.timings.reduction_ms = elapsed_ms(t0);
  return report;
}

QueryReport search(const CompressedIndex& index, const QueryEmbeddings& query, const SearchParams& params) {
  Searcher searcher(index, params);
  return searcher.search(query);
}

SearchReport search_batch(const CompressedIndex& index, std::span<const QueryEmbeddings> queries,
                          const SearchParams& params) {
  SearchReport report;
  if (queries.empty()) return report;
  Searcher searcher(index, params);
  report.queries.reserve(queries.size());
  for (const auto& q : queries) {
    report.queries.push_back(searcher.search(q));
    report.totals += report.queries.back().timings;
  }
  return report;
}

void write_run(std::ostream& out, const SearchReport& report) {
  char score[64];
  for (std::size_t q = 0; q < report.queries.size(); ++q) {
    const auto& results = report.queries[q].results;
    for (std::size_t r = 0; r < results.size(); ++r) {
      std::snprintf(score, sizeof score, "%.6f", static_cast<double>(results[r].score));
      out << q << '\t' << results[r].doc << '\t' << (r + 1) << '\t' << score << '\n';
    }
  }
  if (!out) fail(ErrorCode::kIo, "failed to write run file");
}

Run to_run(const SearchReport& report) {
  Run run;
  for (std::size_t q = 0; q < report.queries.size(); ++q) {
    auto& entries = run[std::to_string(q)];
    for (const auto& r : report.queries[q].results) {
      entries.push_back(RunEntry{std::to_string(r.doc), static_cast<double>(r.score)});
    }
  }
  return run;
}

}  // namespace warp
