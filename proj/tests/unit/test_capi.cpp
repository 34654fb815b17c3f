#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>
#include <unistd.h>

#include <warp/warp.h>

namespace {

struct Paths {
  std::filesystem::path dir;
  Paths() {
    dir = std::filesystem::temp_directory_path() / ("warp-capi-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  ~Paths() {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
  std::string operator()(const char* name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("C API end to end") {
  Paths p;
  warp_synth_config synth;
  warp_synth_config_init(&synth);
  synth.n_docs = 300;
  synth.n_queries = 20;
  REQUIRE(warp_synth_write(&synth, p("c.emb").c_str(), p("q.qry").c_str(), p("qrels.txt").c_str()) == WARP_OK);

  warp_index_config cfg;
  warp_index_config_init(&cfg);
  CHECK(cfg.bits == 4);
  CHECK(cfg.n_centroids == 0);
  warp_index* index = nullptr;
  REQUIRE(warp_index_build(p("c.emb").c_str(), &cfg, &index) == WARP_OK);
  REQUIRE(index != nullptr);
  CHECK(warp_index_n_docs(index) == 300);
  CHECK(warp_index_bits(index) == 4);
  REQUIRE(warp_index_save(index, p("idx").c_str()) == WARP_OK);
  warp_index_free(index);

  REQUIRE(warp_index_load(p("idx").c_str(), &index) == WARP_OK);
  char* json = nullptr;
  REQUIRE(warp_index_stats_json(index, &json) == WARP_OK);
  const auto stats = nlohmann::json::parse(json);
  warp_string_free(json);
  CHECK(stats["residual_bytes_per_token"] == 64);
  CHECK(stats["K"] == warp_index_n_centroids(index));
  CHECK(stats["n_tokens"] == warp_index_n_tokens(index));
  std::uint64_t histogram_total = 0;
  for (const auto& bucket : stats["cluster_size_histogram"]) histogram_total += bucket["clusters"].get<std::uint64_t>();
  CHECK(histogram_total == warp_index_n_centroids(index));

  warp_queries* queries = nullptr;
  REQUIRE(warp_queries_load(p("q.qry").c_str(), &queries) == WARP_OK);
  CHECK(warp_queries_count(queries) == 20);

  warp_search_params params;
  warp_search_params_init(&params);
  CHECK(params.n_probe == 32);
  CHECK(params.t_prime_max == 100000);
  params.k = 5;
  warp_report* report = nullptr;
  REQUIRE(warp_search(index, queries, &params, &report) == WARP_OK);
  CHECK(warp_report_n_queries(report) == 20);
  for (std::uint64_t q = 0; q < 20; ++q) {
    const auto n = warp_report_n_results(report, q);
    CHECK(n <= 5);
    float prev = 1e30f;
    for (std::uint64_t r = 0; r < n; ++r) {
      std::uint32_t doc = 0;
      float score = 0;
      REQUIRE(warp_report_result(report, q, r, &doc, &score) == WARP_OK);
      CHECK(doc < 300);
      CHECK(score <= prev);
      prev = score;
    }
    warp_stage_timings t;
    REQUIRE(warp_report_timings(report, q, &t) == WARP_OK);
    CHECK(t.scoring_ms >= 0.0);
    std::uint64_t centroid_scores = 0;
    REQUIRE(warp_report_counters(report, q, &centroid_scores, nullptr, nullptr) == WARP_OK);
    CHECK(centroid_scores % warp_index_n_centroids(index) == 0);
  }
  CHECK(warp_report_result(report, 0, 99, nullptr, nullptr) == WARP_ERR_OUT_OF_RANGE);
  CHECK(std::strlen(warp_last_error()) > 0);
  REQUIRE(warp_report_write_run(report, p("run.tsv").c_str()) == WARP_OK);

  const std::uint64_t cutoffs[] = {1, 5};
  warp_metrics* metrics = nullptr;
  REQUIRE(warp_evaluate_files(p("run.tsv").c_str(), p("qrels.txt").c_str(), cutoffs, 2, &metrics) == WARP_OK);
  CHECK(warp_metrics_n_queries(metrics) == 20);
  CHECK(warp_metrics_recall(metrics, 1) >= warp_metrics_recall(metrics, 0));
  CHECK(warp_metrics_success_at_5(metrics) == Catch::Approx(warp_metrics_recall(metrics, 1)));
  char* table = nullptr;
  REQUIRE(warp_metrics_table(metrics, &table) == WARP_OK);
  CHECK(std::string(table).find("Recall@5") != std::string::npos);
  warp_string_free(table);

  warp_metrics_free(metrics);
  warp_report_free(report);
  warp_queries_free(queries);
  warp_index_free(index);
}

TEST_CASE("C API error reporting") {
  Paths p;
  warp_index* index = nullptr;
  CHECK(warp_index_load(p("missing").c_str(), &index) == WARP_ERR_IO);
  CHECK(index == nullptr);
  CHECK(std::string(warp_last_error()).find("meta.json") != std::string::npos);

  warp_index_config cfg;
  warp_index_config_init(&cfg);
  cfg.bits = 3;
  CHECK(warp_index_build(p("c.emb").c_str(), &cfg, &index) == WARP_ERR_INVALID_ARGUMENT);
  CHECK(warp_index_build(nullptr, &cfg, &index) == WARP_ERR_INVALID_ARGUMENT);

  std::ofstream(p("bad.qrels")) << "q1 d1 x\n";
  std::ofstream(p("run.tsv")) << "q1\td1\t1\t0.5\n";
  warp_metrics* metrics = nullptr;
  CHECK(warp_evaluate_files(p("run.tsv").c_str(), p("bad.qrels").c_str(), nullptr, 0, &metrics) ==
        WARP_ERR_MALFORMED_QRELS);
  std::ofstream(p("other.qrels")) << "q9 d1 1\n";
  CHECK(warp_evaluate_files(p("run.tsv").c_str(), p("other.qrels").c_str(), nullptr, 0, &metrics) ==
        WARP_ERR_NO_JUDGED_QUERIES);

  CHECK(std::string(warp_status_string(WARP_OK)).size() > 0);
  CHECK(std::string(warp_status_string(WARP_ERR_SIZE_MISMATCH)) != std::string(warp_status_string(WARP_ERR_IO)));
  CHECK(std::string(warp_version()) == "1.0.0");

  // Successful calls clear the previous message.
  warp_synth_config synth;
  warp_synth_config_init(&synth);
  synth.n_docs = 5;
  synth.n_queries = 0;
  CHECK(warp_synth_write(&synth, p("tiny.emb").c_str(), nullptr, nullptr) == WARP_OK);
  CHECK(std::string(warp_last_error()).empty());
}
