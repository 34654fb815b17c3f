#include "warp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "warp/error.hpp"

namespace warp {

Run parse_run(std::istream& in) {
  std::map<std::string, std::vector<std::pair<long, RunEntry>>> ranked;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string qid, docid, extra;
    long rank = 0;
    double score = 0.0;
    if (!(fields >> qid >> docid >> rank >> score) || (fields >> extra) || rank < 1) {
      fail(ErrorCode::kMalformedRun, "run line " + std::to_string(line_no) + " is malformed");
    }
    ranked[qid].push_back({rank, RunEntry{docid, score}});
  }
  Run run;
  for (auto& [qid, entries] : ranked) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& out = run[qid];
    for (auto& [rank, entry] : entries) out.push_back(std::move(entry));
  }
  return run;
}

Run load_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open run file: " + path.string());
  return parse_run(in);
}

MetricSet evaluate(const Run& run, const Qrels& qrels, std::span<const std::size_t> cutoffs) {
  MetricSet out;
  out.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  out.mean_recall.assign(cutoffs.size(), 0.0);

  for (const auto& [qid, entries] : run) {
    const auto judged = qrels.judgments.find(qid);
    if (judged == qrels.judgments.end()) continue;
    std::vector<int> ideal;
    for (const auto& [docid, grade] : judged->second) {
      if (grade > 0) ideal.push_back(grade);
    }
    if (ideal.empty()) continue;
    std::sort(ideal.rbegin(), ideal.rend());

    auto grade_at = [&](std::size_t rank) {
      if (rank >= entries.size()) return 0;
      auto it = judged->second.find(entries[rank].docid);
      return it == judged->second.end() ? 0 : it->second;
    };

    QueryMetrics m;
    m.qid = qid;
    for (std::size_t cutoff : cutoffs) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < std::min(cutoff, entries.size()); ++r) hits += grade_at(r) > 0;
      m.recall.push_back(static_cast<double>(hits) / static_cast<double>(ideal.size()));
    }
    for (std::size_t r = 0; r < 5; ++r) {
      if (grade_at(r) > 0) m.success_at_5 = 1.0;
    }
    double dcg = 0.0, idcg = 0.0;
    for (std::size_t r = 0; r < 10; ++r) {
      const double discount = 1.0 / std::log2(static_cast<double>(r) + 2.0);
      dcg += grade_at(r) * discount;
      if (r < ideal.size()) idcg += ideal[r] * discount;
    }
    m.ndcg_at_10 = dcg / idcg;
    out.per_query.push_back(std::move(m));
  }

  if (out.per_query.empty()) fail(ErrorCode::kNoJudgedQueries, "no run query has relevance judgments");
  const auto n = static_cast<double>(out.per_query.size());
  for (const auto& m : out.per_query) {
    for (std::size_t c = 0; c < cutoffs.size(); ++c) out.mean_recall[c] += m.recall[c] / n;
    out.mean_success_at_5 += m.success_at_5 / n;
    out.mean_ndcg_at_10 += m.ndcg_at_10 / n;
  }
  return out;
}

void write_metrics_table(std::ostream& out, const MetricSet& metrics) {
  out << std::fixed << std::setprecision(4);
  out << "queries\t" << metrics.per_query.size() << '\n';
  for (std::size_t c = 0; c < metrics.cutoffs.size(); ++c) {
    out << "Recall@" << metrics.cutoffs[c] << '\t' << metrics.mean_recall[c] << '\n';
  }
  out << "Success@5\t" << metrics.mean_success_at_5 << '\n';
  out << "nDCG@10\t" << metrics.mean_ndcg_at_10 << '\n';
}

}  // namespace warp
