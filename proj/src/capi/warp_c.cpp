#include "warp/warp.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "warp/corpus.hpp"
#include "warp/engine.hpp"
#include "warp/error.hpp"
#include "warp/index.hpp"
#include "warp/metrics.hpp"

struct warp_index {
  warp::CompressedIndex index;
};

struct warp_queries {
  std::vector<warp::QueryEmbeddings> queries;
};

struct warp_report {
  warp::SearchReport report;
};

struct warp_metrics {
  warp::MetricSet metrics;
};

namespace {

thread_local std::string g_last_error;

warp_status to_status(warp::ErrorCode code) { return static_cast<warp_status>(code); }

template <class Fn>
warp_status guarded(Fn&& fn) noexcept {
  g_last_error.clear();
  try {
    fn();
    return WARP_OK;
  } catch (const warp::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return WARP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return WARP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return WARP_ERR_INTERNAL;
  }
}

void require(const void* ptr, const char* what) {
  if (ptr == nullptr) warp::fail(warp::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* copy_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

const warp::QueryReport& report_query(const warp_report* report, uint64_t query) {
  require(report, "report");
  if (query >= report->report.queries.size()) {
    warp::fail(warp::ErrorCode::kOutOfRange, "query index out of range");
  }
  return report->report.queries[query];
}

warp::SearchParams to_params(const warp_search_params& p) {
  warp::SearchParams params;
  params.n_probe = p.n_probe;
  if (p.t_prime != 0) params.t_prime = p.t_prime;
  params.t_prime_max = p.t_prime_max;
  params.k = p.k;
  params.threads = p.threads;
  return params;
}

}  // namespace

extern "C" {

const char* warp_status_string(warp_status status) {
  return warp::error_code_name(static_cast<warp::ErrorCode>(status));
}

const char* warp_last_error(void) { return g_last_error.c_str(); }

const char* warp_version(void) { return "1.0.0"; }

void warp_string_free(char* str) { std::free(str); }

void warp_index_config_init(warp_index_config* config) {
  if (config == nullptr) return;
  const warp::IndexConfig defaults;
  config->bits = defaults.bits;
  config->n_centroids = 0;
  config->kmeans_iters = defaults.kmeans_iters;
  config->seed = defaults.seed;
  config->sample_factor = defaults.sample_factor;
}

warp_status warp_index_build(const char* collection_path, const warp_index_config* config,
                             warp_index** out) {
  return guarded([&] {
    require(collection_path, "collection_path");
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    warp::IndexConfig cfg;
    cfg.bits = config->bits;
    if (config->n_centroids != 0) cfg.n_centroids = config->n_centroids;
    cfg.kmeans_iters = config->kmeans_iters;
    cfg.seed = config->seed;
    cfg.sample_factor = config->sample_factor;
    cfg.validate();
    const auto collection = warp::load_collection(collection_path);
    *out = new warp_index{warp::build_index(collection, cfg)};
  });
}

warp_status warp_index_save(const warp_index* index, const char* dir) {
  return guarded([&] {
    require(index, "index");
    require(dir, "dir");
    warp::save_index(index->index, dir);
  });
}

warp_status warp_index_load(const char* dir, warp_index** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = nullptr;
    *out = new warp_index{warp::load_index(dir)};
  });
}

void warp_index_free(warp_index* index) { delete index; }

uint64_t warp_index_n_centroids(const warp_index* index) { return index ? index->index.n_centroids() : 0; }
uint64_t warp_index_n_tokens(const warp_index* index) { return index ? index->index.n_tokens() : 0; }
uint64_t warp_index_n_docs(const warp_index* index) { return index ? index->index.n_docs : 0; }
int warp_index_bits(const warp_index* index) { return index ? index->index.bits : 0; }

warp_status warp_index_stats_json(const warp_index* index, char** out_json) {
  return guarded([&] {
    require(index, "index");
    require(out_json, "out_json");
    const auto& idx = index->index;
    const auto sizes = idx.cluster_sizes();

    // Power-of-two buckets: "0", "1", "2-3", "4-7", ...
    std::map<std::uint64_t, std::uint64_t> histogram;
    std::uint64_t min_size = sizes.empty() ? 0 : sizes.front(), max_size = 0, empty = 0;
    for (auto s : sizes) {
      std::uint64_t lo = 0;
      if (s > 0) {
        lo = 1;
        while (lo * 2 <= s) lo *= 2;
      }
      ++histogram[lo];
      min_size = std::min(min_size, s);
      max_size = std::max(max_size, s);
      empty += s == 0;
    }
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (auto [lo, count] : histogram) {
      const std::uint64_t hi = lo == 0 ? 0 : 2 * lo - 1;
      hist.push_back({{"min", lo}, {"max", hi}, {"clusters", count}});
    }

    const double n_tokens = static_cast<double>(idx.n_tokens());
    nlohmann::ordered_json stats;
    stats["b"] = idx.bits;
    stats["K"] = idx.n_centroids();
    stats["n_docs"] = idx.n_docs;
    stats["n_tokens"] = idx.n_tokens();
    stats["residual_bytes_per_token"] = idx.code_bytes_per_token();
    stats["residual_bytes"] = idx.residual_bytes();
    stats["total_bytes"] = idx.total_bytes();
    stats["total_bytes_per_token"] = n_tokens > 0 ? static_cast<double>(idx.total_bytes()) / n_tokens : 0.0;
    stats["compression_vs_float32"] = static_cast<double>(warp::kDim * sizeof(float)) /
                                      static_cast<double>(idx.code_bytes_per_token());
    stats["cluster_size"] = {{"min", min_size},
                             {"max", max_size},
                             {"mean", idx.n_centroids() ? n_tokens / static_cast<double>(idx.n_centroids()) : 0.0},
                             {"empty", empty}};
    stats["cluster_size_histogram"] = hist;
    *out_json = copy_string(stats.dump(2));
  });
}

warp_status warp_queries_load(const char* path, warp_queries** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new warp_queries{warp::load_queries(path)};
  });
}

void warp_queries_free(warp_queries* queries) { delete queries; }

uint64_t warp_queries_count(const warp_queries* queries) { return queries ? queries->queries.size() : 0; }

void warp_search_params_init(warp_search_params* params) {
  if (params == nullptr) return;
  const warp::SearchParams defaults;
  params->n_probe = defaults.n_probe;
  params->t_prime = 0;
  params->t_prime_max = defaults.t_prime_max;
  params->k = defaults.k;
  params->threads = defaults.threads;
}

warp_status warp_search(const warp_index* index, const warp_queries* queries,
                        const warp_search_params* params, warp_report** out) {
  return guarded([&] {
    require(index, "index");
    require(queries, "queries");
    require(params, "params");
    require(out, "out");
    *out = nullptr;
    *out = new warp_report{warp::search_batch(index->index, queries->queries, to_params(*params))};
  });
}

void warp_report_free(warp_report* report) { delete report; }

uint64_t warp_report_n_queries(const warp_report* report) {
  return report ? report->report.queries.size() : 0;
}

uint64_t warp_report_n_results(const warp_report* report, uint64_t query) {
  if (report == nullptr || query >= report->report.queries.size()) return 0;
  return report->report.queries[query].results.size();
}

warp_status warp_report_result(const warp_report* report, uint64_t query, uint64_t rank,
                               uint32_t* doc, float* score) {
  return guarded([&] {
    const auto& q = report_query(report, query);
    if (rank >= q.results.size()) warp::fail(warp::ErrorCode::kOutOfRange, "rank out of range");
    if (doc) *doc = q.results[rank].doc;
    if (score) *score = q.results[rank].score;
  });
}

warp_status warp_report_timings(const warp_report* report, uint64_t query, warp_stage_timings* out) {
  return guarded([&] {
    require(out, "out");
    const auto& t = report_query(report, query).timings;
    *out = warp_stage_timings{t.candidate_generation_ms, t.scoring_ms, t.reduction_ms};
  });
}

warp_status warp_report_counters(const warp_report* report, uint64_t query, uint64_t* centroid_scores,
                                 uint64_t* tokens_scored, uint64_t* candidates) {
  return guarded([&] {
    const auto& q = report_query(report, query);
    if (centroid_scores) *centroid_scores = q.centroid_scores_computed;
    if (tokens_scored) *tokens_scored = q.tokens_scored;
    if (candidates) *candidates = q.candidates;
  });
}

warp_status warp_report_write_run(const warp_report* report, const char* path) {
  return guarded([&] {
    require(report, "report");
    require(path, "path");
    std::ofstream out(path, std::ios::trunc);
    if (!out) warp::fail(warp::ErrorCode::kIo, std::string("cannot open for writing: ") + path);
    warp::write_run(out, report->report);
    out.close();
    if (!out) warp::fail(warp::ErrorCode::kIo, std::string("write failed: ") + path);
  });
}

warp_status warp_evaluate_files(const char* run_path, const char* qrels_path, const uint64_t* cutoffs,
                                size_t n_cutoffs, warp_metrics** out) {
  return guarded([&] {
    require(run_path, "run_path");
    require(qrels_path, "qrels_path");
    require(out, "out");
    if (n_cutoffs > 0) require(cutoffs, "cutoffs");
    *out = nullptr;
    std::vector<std::size_t> ks(cutoffs, cutoffs + n_cutoffs);
    const auto run = warp::load_run(run_path);
    const auto qrels = warp::load_qrels(qrels_path);
    *out = new warp_metrics{warp::evaluate(run, qrels, ks)};
  });
}

void warp_metrics_free(warp_metrics* metrics) { delete metrics; }

uint64_t warp_metrics_n_queries(const warp_metrics* metrics) {
  return metrics ? metrics->metrics.per_query.size() : 0;
}

double warp_metrics_recall(const warp_metrics* metrics, size_t cutoff_index) {
  if (metrics == nullptr || cutoff_index >= metrics->metrics.mean_recall.size()) return 0.0;
  return metrics->metrics.mean_recall[cutoff_index];
}

double warp_metrics_success_at_5(const warp_metrics* metrics) {
  return metrics ? metrics->metrics.mean_success_at_5 : 0.0;
}

double warp_metrics_ndcg_at_10(const warp_metrics* metrics) {
  return metrics ? metrics->metrics.mean_ndcg_at_10 : 0.0;
}

warp_status warp_metrics_table(const warp_metrics* metrics, char** out_text) {
  return guarded([&] {
    require(metrics, "metrics");
    require(out_text, "out_text");
    std::ostringstream text;
    warp::write_metrics_table(text, metrics->metrics);
    *out_text = copy_string(text.str());
  });
}

void warp_synth_config_init(warp_synth_config* config) {
  if (config == nullptr) return;
  const warp::SynthSpec corpus;
  const warp::SynthQuerySpec queries;
  config->seed = corpus.seed;
  config->n_docs = corpus.n_docs;
  config->min_tokens = corpus.min_tokens;
  config->max_tokens = corpus.max_tokens;
  config->n_latent_clusters = corpus.n_latent_clusters;
  config->n_queries = queries.n_queries;
  config->query_min_tokens = queries.min_tokens;
  config->query_max_tokens = queries.max_tokens;
  config->noise = corpus.noise;
}

warp_status warp_synth_write(const warp_synth_config* config, const char* collection_path,
                             const char* queries_path, const char* qrels_path) {
  return guarded([&] {
    require(config, "config");
    warp::SynthSpec spec;
    spec.seed = config->seed;
    spec.n_docs = config->n_docs;
    spec.min_tokens = config->min_tokens;
    spec.max_tokens = config->max_tokens;
    spec.n_latent_clusters = config->n_latent_clusters;
    spec.noise = config->noise;
    const auto collection = warp::synth_corpus(spec);
    if (collection_path) warp::save_collection(collection, collection_path);
    if (config->n_queries == 0 || (!queries_path && !qrels_path)) return;

    warp::SynthQuerySpec qspec;
    qspec.seed = config->seed + 1;
    qspec.n_queries = config->n_queries;
    qspec.min_tokens = config->query_min_tokens;
    qspec.max_tokens = config->query_max_tokens;
    qspec.noise = config->noise;
    const auto queries = warp::synth_queries(collection, qspec);
    if (queries_path) warp::save_queries(queries.queries, queries_path);
    if (qrels_path) warp::save_qrels(warp::nearest_doc_qrels(collection, queries.queries), qrels_path);
  });
}

}  // extern "C"
