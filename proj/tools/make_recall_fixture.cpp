// Writes the recall-sweep fixture: Recall@10 of the exhaustive dense oracle
// on the seed-42 synthetic corpus, for b in {2, 4} and several n_probe values.
//
//   make_recall_fixture <out.json>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "warp/corpus.hpp"
#include "warp/index.hpp"
#include "warp/metrics.hpp"
#include "warp/reduce.hpp"
#include "warp/select.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <out.json>\n", argv[0]);
    return 2;
  }
  try {
    warp::SynthSpec corpus_spec;
    corpus_spec.seed = 42;
    corpus_spec.n_docs = 1500;
    corpus_spec.min_tokens = 4;
    corpus_spec.max_tokens = 8;
    corpus_spec.n_latent_clusters = 32;
    corpus_spec.noise = 0.25f;

    warp::SynthQuerySpec query_spec;
    query_spec.seed = 43;
    query_spec.n_queries = 100;
    query_spec.min_tokens = 4;
    query_spec.max_tokens = 8;
    query_spec.noise = 0.25f;

    const std::size_t k = 10;
    const auto collection = warp::synth_corpus(corpus_spec);
    const auto queries = warp::synth_queries(collection, query_spec).queries;
    const auto qrels = warp::nearest_doc_qrels(collection, queries);

    nlohmann::ordered_json out;
    out["corpus"] = {{"seed", corpus_spec.seed},
                     {"n_docs", corpus_spec.n_docs},
                     {"min_tokens", corpus_spec.min_tokens},
                     {"max_tokens", corpus_spec.max_tokens},
                     {"n_latent_clusters", corpus_spec.n_latent_clusters},
                     {"noise", corpus_spec.noise}};
    out["queries"] = {{"seed", query_spec.seed},
                      {"n_queries", query_spec.n_queries},
                      {"min_tokens", query_spec.min_tokens},
                      {"max_tokens", query_spec.max_tokens},
                      {"noise", query_spec.noise}};
    out["k"] = k;
    out["index_seed"] = 42;
    out["runs"] = nlohmann::ordered_json::array();

    for (int bits : {4, 2}) {
      warp::IndexConfig config;
      config.bits = bits;
      config.seed = 42;
      const auto index = warp::build_index(collection, config);
      const std::size_t n_centroids = index.n_centroids();
      for (std::size_t n_probe : {std::size_t{1}, std::size_t{4}, std::size_t{16}, n_centroids}) {
        warp::SearchParams params;
        params.n_probe = n_probe;
        params.k = k;
        warp::Run run;
        std::vector<std::string> top_docs;  // one space-separated line per query
        for (std::size_t q = 0; q < queries.size(); ++q) {
          auto ranked = warp::oracle_score(index, queries[q], warp::plan(queries[q], index, params));
          if (ranked.size() > k) ranked.resize(k);
          auto& entries = run[std::to_string(q)];
          top_docs.emplace_back();
          for (const auto& r : ranked) {
            entries.push_back(warp::RunEntry{std::to_string(r.doc), static_cast<double>(r.score)});
            if (!top_docs.back().empty()) top_docs.back() += ' ';
            top_docs.back() += std::to_string(r.doc);
          }
        }
        const std::vector<std::size_t> cutoffs{k};
        const auto metrics = warp::evaluate(run, qrels, cutoffs);
        out["runs"].push_back({{"b", bits},
                               {"K", n_centroids},
                               {"n_probe", n_probe},
                               {"recall_at_10", metrics.mean_recall[0]},
                               {"top_docs", top_docs}});
        std::fprintf(stderr, "b=%d K=%zu n_probe=%zu recall@10=%.4f\n", bits, n_centroids, n_probe,
                     metrics.mean_recall[0]);
      }
    }

    std::ofstream file(argv[1], std::ios::trunc);
    file << out.dump(1) << '\n';
    if (!file) {
      std::fprintf(stderr, "failed to write %s\n", argv[1]);
      return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
