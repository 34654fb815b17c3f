// Command-line front end. Talks to the engine only through the C API.

#include <warp/warp.h>

#include <charconv>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(warp_status status, const std::string& context) {
  if (status == WARP_OK) return;
  std::string msg = context + ": " + warp_status_string(status);
  const char* detail = warp_last_error();
  if (detail != nullptr && *detail != '\0') msg += ": " + std::string(detail);
  throw CliError(msg);
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using IndexPtr = std::unique_ptr<warp_index, Deleter<warp_index, warp_index_free>>;
using QueriesPtr = std::unique_ptr<warp_queries, Deleter<warp_queries, warp_queries_free>>;
using ReportPtr = std::unique_ptr<warp_report, Deleter<warp_report, warp_report_free>>;
using MetricsPtr = std::unique_ptr<warp_metrics, Deleter<warp_metrics, warp_metrics_free>>;
using StringPtr = std::unique_ptr<char, Deleter<char, warp_string_free>>;

// "auto" maps to 0, which the C API reads as "derive from the data".
std::uint64_t parse_auto(const std::string& text, const char* flag) {
  if (text == "auto") return 0;
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw CliError(std::string(flag) + " expects 'auto' or a positive integer, got '" + text + "'");
  }
  return value;
}

IndexPtr load_index(const std::string& dir) {
  warp_index* raw = nullptr;
  check(warp_index_load(dir.c_str(), &raw), "loading index " + dir);
  return IndexPtr(raw);
}

QueriesPtr load_queries(const std::string& path) {
  warp_queries* raw = nullptr;
  check(warp_queries_load(path.c_str(), &raw), "loading queries " + path);
  return QueriesPtr(raw);
}

struct SearchOptions {
  std::uint64_t n_probe = 32;
  std::string t_prime = "auto";
  std::uint64_t t_prime_max = 100000;
  std::uint64_t k = 10;
  std::uint64_t threads = 1;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--n-probe", n_probe, "Clusters probed per query token")->capture_default_str();
    cmd.add_option("--t-prime", t_prime, "Cluster-size threshold for missing-similarity estimates (auto|<int>)")
        ->capture_default_str();
    cmd.add_option("--t-prime-max", t_prime_max, "Upper bound for the automatic t'")->capture_default_str();
    cmd.add_option("--k", k, "Documents returned per query")->capture_default_str();
    cmd.add_option("--threads", threads, "Worker threads per query")->capture_default_str();
  }

  warp_search_params params() const {
    warp_search_params p;
    warp_search_params_init(&p);
    p.n_probe = n_probe;
    p.t_prime = parse_auto(t_prime, "--t-prime");
    p.t_prime_max = t_prime_max;
    p.k = k;
    p.threads = threads;
    return p;
  }
};

std::vector<std::uint64_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    out.push_back(parse_auto(text.substr(pos, comma - pos), flag));
    if (out.back() == 0) throw CliError(std::string(flag) + " does not accept 'auto'");
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-vector late-interaction retrieval engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(warp_version()));

  // index
  std::string collection_path, index_dir;
  int bits = 4;
  std::string n_centroids = "auto";
  std::uint64_t seed = 42, kmeans_iters = 20, sample_factor = 16;
  auto* index_cmd = app.add_subcommand("index", "Build a compressed index from an embedding collection");
  index_cmd->add_option("collection", collection_path, "Collection file (.emb)")->required();
  index_cmd->add_option("index_dir", index_dir, "Output index directory")->required();
  index_cmd->add_option("--b", bits, "Residual bits per dimension")
      ->check(CLI::IsMember({2, 4}))
      ->capture_default_str();
  index_cmd->add_option("--n-centroids", n_centroids, "Number of centroids (auto|<int>)")->capture_default_str();
  index_cmd->add_option("--seed", seed, "Sampling and clustering seed")->capture_default_str();
  index_cmd->add_option("--kmeans-iters", kmeans_iters, "Maximum k-means iterations")->capture_default_str();
  index_cmd->add_option("--sample-factor", sample_factor, "Training sample multiplier")->capture_default_str();

  // search
  std::string queries_path, run_path;
  SearchOptions search_opts;
  bool show_timings = false;
  auto* search_cmd = app.add_subcommand("search", "Retrieve top-k documents for each query");
  search_cmd->add_option("index_dir", index_dir, "Index directory")->required();
  search_cmd->add_option("queries", queries_path, "Query file (.qry)")->required();
  search_cmd->add_option("run", run_path, "Output run file")->required();
  search_opts.add_to(*search_cmd);
  search_cmd->add_flag("--timings", show_timings, "Print per-stage timings to stderr");

  // eval
  std::string qrels_path;
  std::vector<std::uint64_t> cutoffs{10, 100};
  auto* eval_cmd = app.add_subcommand("eval", "Score a run file against relevance judgments");
  eval_cmd->add_option("run", run_path, "Run file")->required();
  eval_cmd->add_option("qrels", qrels_path, "Qrels file")->required();
  eval_cmd->add_option("--recall-at", cutoffs, "Recall cutoffs")->delimiter(',')->capture_default_str();

  // inspect
  bool as_json = false;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print index statistics");
  inspect_cmd->add_option("index_dir", index_dir, "Index directory")->required();
  inspect_cmd->add_flag("--json", as_json, "Machine-readable output");

  // bench
  std::string probe_list = "1,4,16,32", thread_list = "1";
  std::uint64_t repeats = 1;
  SearchOptions bench_opts;
  auto* bench_cmd = app.add_subcommand("bench", "Report mean per-stage latency across settings");
  bench_cmd->add_option("index_dir", index_dir, "Index directory")->required();
  bench_cmd->add_option("queries", queries_path, "Query file (.qry)")->required();
  bench_cmd->add_option("--n-probes", probe_list, "Comma-separated n_probe values")->capture_default_str();
  bench_cmd->add_option("--thread-counts", thread_list, "Comma-separated thread counts")->capture_default_str();
  bench_cmd->add_option("--repeats", repeats, "Passes over the query set per setting")->capture_default_str();
  bench_cmd->add_option("--t-prime", bench_opts.t_prime, "auto|<int>")->capture_default_str();
  bench_cmd->add_option("--t-prime-max", bench_opts.t_prime_max)->capture_default_str();
  bench_cmd->add_option("--k", bench_opts.k)->capture_default_str();

  // synth
  warp_synth_config synth;
  warp_synth_config_init(&synth);
  std::string synth_queries, synth_qrels;
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic collection and queries");
  synth_cmd->add_option("collection", collection_path, "Output collection file")->required();
  synth_cmd->add_option("--queries", synth_queries, "Output query file");
  synth_cmd->add_option("--qrels", synth_qrels, "Output qrels (exact nearest document per query)");
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--n-docs", synth.n_docs)->capture_default_str();
  synth_cmd->add_option("--min-tokens", synth.min_tokens)->capture_default_str();
  synth_cmd->add_option("--max-tokens", synth.max_tokens)->capture_default_str();
  synth_cmd->add_option("--n-latent", synth.n_latent_clusters, "Latent directions")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise)->capture_default_str();
  synth_cmd->add_option("--n-queries", synth.n_queries)->capture_default_str();
  synth_cmd->add_option("--query-min-tokens", synth.query_min_tokens)->capture_default_str();
  synth_cmd->add_option("--query-max-tokens", synth.query_max_tokens)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*index_cmd) {
      warp_index_config config;
      warp_index_config_init(&config);
      config.bits = bits;
      config.n_centroids = parse_auto(n_centroids, "--n-centroids");
      config.seed = seed;
      config.kmeans_iters = kmeans_iters;
      config.sample_factor = sample_factor;
      warp_index* raw = nullptr;
      check(warp_index_build(collection_path.c_str(), &config, &raw), "building index");
      IndexPtr index(raw);
      check(warp_index_save(index.get(), index_dir.c_str()), "saving index " + index_dir);
      std::fprintf(stderr, "indexed %llu tokens from %llu documents into %llu centroids (b=%d)\n",
                   static_cast<unsigned long long>(warp_index_n_tokens(index.get())),
                   static_cast<unsigned long long>(warp_index_n_docs(index.get())),
                   static_cast<unsigned long long>(warp_index_n_centroids(index.get())), bits);
    } else if (*search_cmd) {
      const auto index = load_index(index_dir);
      const auto queries = load_queries(queries_path);
      const warp_search_params params = search_opts.params();
      warp_report* raw = nullptr;
      check(warp_search(index.get(), queries.get(), &params, &raw), "search");
      ReportPtr report(raw);
      check(warp_report_write_run(report.get(), run_path.c_str()), "writing run " + run_path);
      if (show_timings) {
        const auto n = warp_report_n_queries(report.get());
        for (std::uint64_t q = 0; q < n; ++q) {
          warp_stage_timings t;
          check(warp_report_timings(report.get(), q, &t), "timings");
          std::fprintf(stderr, "query %llu\tcandidates %.3f ms\tscoring %.3f ms\treduction %.3f ms\n",
                       static_cast<unsigned long long>(q), t.candidate_generation_ms, t.scoring_ms,
                       t.reduction_ms);
        }
      }
    } else if (*eval_cmd) {
      warp_metrics* raw = nullptr;
      check(warp_evaluate_files(run_path.c_str(), qrels_path.c_str(), cutoffs.data(), cutoffs.size(), &raw),
            "evaluating " + run_path);
      MetricsPtr metrics(raw);
      char* text = nullptr;
      check(warp_metrics_table(metrics.get(), &text), "formatting metrics");
      StringPtr owned(text);
      std::fputs(text, stdout);
    } else if (*inspect_cmd) {
      const auto index = load_index(index_dir);
      char* json = nullptr;
      check(warp_index_stats_json(index.get(), &json), "collecting stats");
      StringPtr owned(json);
      if (as_json) {
        std::printf("%s\n", json);
      } else {
        const auto* idx = index.get();
        const std::uint64_t b = static_cast<std::uint64_t>(warp_index_bits(idx));
        std::printf("documents\t%llu\n", static_cast<unsigned long long>(warp_index_n_docs(idx)));
        std::printf("tokens\t%llu\n", static_cast<unsigned long long>(warp_index_n_tokens(idx)));
        std::printf("centroids (K)\t%llu\n", static_cast<unsigned long long>(warp_index_n_centroids(idx)));
        std::printf("bits (b)\t%llu\n", static_cast<unsigned long long>(b));
        std::printf("residual bytes/token\t%llu\n", static_cast<unsigned long long>(16 * b));
        std::printf("stats\n%s\n", json);
      }
    } else if (*bench_cmd) {
      const auto index = load_index(index_dir);
      const auto queries = load_queries(queries_path);
      const auto n_queries = warp_queries_count(queries.get());
      if (n_queries == 0) throw CliError("query file is empty");
      std::printf("n_probe\tthreads\tcandidates_ms\tscoring_ms\treduction_ms\ttotal_ms\ttokens_scored\n");
      for (auto threads : parse_list(thread_list, "--thread-counts")) {
        for (auto n_probe : parse_list(probe_list, "--n-probes")) {
          bench_opts.n_probe = n_probe;
          bench_opts.threads = threads;
          const warp_search_params params = bench_opts.params();
          warp_stage_timings sum{0, 0, 0};
          double tokens = 0;
          for (std::uint64_t r = 0; r < repeats; ++r) {
            warp_report* raw = nullptr;
            check(warp_search(index.get(), queries.get(), &params, &raw), "search");
            ReportPtr report(raw);
            for (std::uint64_t q = 0; q < n_queries; ++q) {
              warp_stage_timings t;
              std::uint64_t scored = 0;
              check(warp_report_timings(report.get(), q, &t), "timings");
              check(warp_report_counters(report.get(), q, nullptr, &scored, nullptr), "counters");
              sum.candidate_generation_ms += t.candidate_generation_ms;
              sum.scoring_ms += t.scoring_ms;
              sum.reduction_ms += t.reduction_ms;
              tokens += static_cast<double>(scored);
            }
          }
          const double n = static_cast<double>(n_queries * repeats);
          const double c = sum.candidate_generation_ms / n, s = sum.scoring_ms / n, red = sum.reduction_ms / n;
          std::printf("%llu\t%llu\t%.3f\t%.3f\t%.3f\t%.3f\t%.0f\n", static_cast<unsigned long long>(n_probe),
                      static_cast<unsigned long long>(threads), c, s, red, c + s + red, tokens / n);
        }
      }
    } else if (*synth_cmd) {
      if (synth_queries.empty() && synth_qrels.empty()) synth.n_queries = 0;
      check(warp_synth_write(&synth, collection_path.c_str(), synth_queries.empty() ? nullptr : synth_queries.c_str(),
                             synth_qrels.empty() ? nullptr : synth_qrels.c_str()),
            "writing synthetic data");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "warp: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
