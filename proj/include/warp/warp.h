/*
 * warp.h - C interface to the multi-vector retrieval engine.
 *
 * All objects are opaque handles created by a *_load / *_build / *_search
 * call and released with the matching *_free. Every fallible call returns a
 * warp_status; on failure warp_last_error() describes the problem for the
 * calling thread until its next API call.
 *
 * Handles are immutable once created and may be shared across threads,
 * except that a warp_report or warp_metrics must not be freed while another
 * thread reads it.
 */
#ifndef WARP_WARP_H
#define WARP_WARP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(WARP_BUILDING_LIBRARY)
#    define WARP_API __declspec(dllexport)
#  else
#    define WARP_API __declspec(dllimport)
#  endif
#else
#  define WARP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values match warp::ErrorCode. */
typedef enum warp_status {
  WARP_OK = 0,
  WARP_ERR_INVALID_ARGUMENT = 1,
  WARP_ERR_IO = 2,
  WARP_ERR_MALFORMED_HEADER = 3,
  WARP_ERR_BAD_DIMENSION = 4,
  WARP_ERR_NON_MONOTONE_OFFSETS = 5,
  WARP_ERR_EMPTY_DOCUMENT = 6,
  WARP_ERR_NON_FINITE = 7,
  WARP_ERR_NORM_VIOLATION = 8,
  WARP_ERR_QUERY_LENGTH = 9,
  WARP_ERR_MALFORMED_QRELS = 10,
  WARP_ERR_VERSION_MISMATCH = 11,
  WARP_ERR_SIZE_MISMATCH = 12,
  WARP_ERR_CORRUPT_OFFSETS = 13,
  WARP_ERR_OUT_OF_RANGE = 14,
  WARP_ERR_DEGENERATE_SAMPLE = 15,
  WARP_ERR_NO_JUDGED_QUERIES = 16,
  WARP_ERR_MALFORMED_RUN = 17,
  WARP_ERR_INTERNAL = 18
} warp_status;

typedef struct warp_index warp_index;
typedef struct warp_queries warp_queries;
typedef struct warp_report warp_report;
typedef struct warp_metrics warp_metrics;

WARP_API const char* warp_status_string(warp_status status);
WARP_API const char* warp_last_error(void);
WARP_API const char* warp_version(void);

/* Frees strings returned through char** out-parameters. */
WARP_API void warp_string_free(char* str);

/* ---- index ------------------------------------------------------------ */

typedef struct warp_index_config {
  int bits;               /* 2 or 4 */
  uint64_t n_centroids;   /* 0 = auto */
  uint64_t kmeans_iters;
  uint64_t seed;
  uint64_t sample_factor;
} warp_index_config;

WARP_API void warp_index_config_init(warp_index_config* config);

WARP_API warp_status warp_index_build(const char* collection_path, const warp_index_config* config,
                                      warp_index** out);
WARP_API warp_status warp_index_save(const warp_index* index, const char* dir);
WARP_API warp_status warp_index_load(const char* dir, warp_index** out);
WARP_API void warp_index_free(warp_index* index);

WARP_API uint64_t warp_index_n_centroids(const warp_index* index);
WARP_API uint64_t warp_index_n_tokens(const warp_index* index);
WARP_API uint64_t warp_index_n_docs(const warp_index* index);
WARP_API int warp_index_bits(const warp_index* index);

/* Machine-readable stats (K, sizes, cluster-size histogram, bytes/token). */
WARP_API warp_status warp_index_stats_json(const warp_index* index, char** out_json);

/* ---- queries ---------------------------------------------------------- */

WARP_API warp_status warp_queries_load(const char* path, warp_queries** out);
WARP_API void warp_queries_free(warp_queries* queries);
WARP_API uint64_t warp_queries_count(const warp_queries* queries);

/* ---- search ----------------------------------------------------------- */

typedef struct warp_search_params {
  uint64_t n_probe;      /* clusters per query token */
  uint64_t t_prime;      /* 0 = auto */
  uint64_t t_prime_max;
  uint64_t k;
  uint64_t threads;
} warp_search_params;

typedef struct warp_stage_timings {
  double candidate_generation_ms;
  double scoring_ms;
  double reduction_ms;
} warp_stage_timings;

WARP_API void warp_search_params_init(warp_search_params* params);

WARP_API warp_status warp_search(const warp_index* index, const warp_queries* queries,
                                 const warp_search_params* params, warp_report** out);
WARP_API void warp_report_free(warp_report* report);

WARP_API uint64_t warp_report_n_queries(const warp_report* report);
WARP_API uint64_t warp_report_n_results(const warp_report* report, uint64_t query);
WARP_API warp_status warp_report_result(const warp_report* report, uint64_t query, uint64_t rank,
                                        uint32_t* doc, float* score);
WARP_API warp_status warp_report_timings(const warp_report* report, uint64_t query,
                                         warp_stage_timings* out);
WARP_API warp_status warp_report_counters(const warp_report* report, uint64_t query,
                                          uint64_t* centroid_scores, uint64_t* tokens_scored,
                                          uint64_t* candidates);
/* Four-column TSV run file: qid docid rank score. */
WARP_API warp_status warp_report_write_run(const warp_report* report, const char* path);

/* ---- evaluation ------------------------------------------------------- */

WARP_API warp_status warp_evaluate_files(const char* run_path, const char* qrels_path,
                                         const uint64_t* cutoffs, size_t n_cutoffs,
                                         warp_metrics** out);
WARP_API void warp_metrics_free(warp_metrics* metrics);
WARP_API uint64_t warp_metrics_n_queries(const warp_metrics* metrics);
WARP_API double warp_metrics_recall(const warp_metrics* metrics, size_t cutoff_index);
WARP_API double warp_metrics_success_at_5(const warp_metrics* metrics);
WARP_API double warp_metrics_ndcg_at_10(const warp_metrics* metrics);
/* Tab-separated metric table, as printed by the CLI. */
WARP_API warp_status warp_metrics_table(const warp_metrics* metrics, char** out_text);

/* ---- synthetic fixtures ----------------------------------------------- */

typedef struct warp_synth_config {
  uint64_t seed;
  uint64_t n_docs;
  uint64_t min_tokens;
  uint64_t max_tokens;
  uint64_t n_latent_clusters;
  uint64_t n_queries;
  uint64_t query_min_tokens;
  uint64_t query_max_tokens;
  float noise;
} warp_synth_config;

WARP_API void warp_synth_config_init(warp_synth_config* config);

/* Writes a collection, a query file drawn from it, and qrels marking each
 * query's exact MaxSim-nearest document as relevant. Any path may be NULL
 * to skip that output (queries and qrels are skipped when n_queries = 0). */
WARP_API warp_status warp_synth_write(const warp_synth_config* config, const char* collection_path,
                                      const char* queries_path, const char* qrels_path);

#ifdef __cplusplus
}
#endif

#endif /* WARP_WARP_H */
