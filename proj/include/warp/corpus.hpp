#pragma once

// Token-embedding collections, query embeddings and relevance judgments,
// together with their on-disk formats and a seeded synthetic generator.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace warp {

inline constexpr std::size_t kDim = 128;
inline constexpr std::size_t kQueryMaxLen = 32;
inline constexpr float kNormTolerance = 1e-3f;

using TokenView = std::span<const float, kDim>;

/// Documents as variable-length runs of unit-norm 128-d token vectors.
/// doc_offsets has n_docs + 1 entries; document d owns tokens
/// [doc_offsets[d], doc_offsets[d + 1]).
struct EmbeddingCollection {
  std::vector<std::uint64_t> doc_offsets{0};
  std::vector<float> vectors;

  [[nodiscard]] std::size_t n_docs() const noexcept { return doc_offsets.size() - 1; }
  [[nodiscard]] std::size_t n_tokens() const noexcept { return vectors.size() / kDim; }
  [[nodiscard]] TokenView token(std::size_t t) const {
    return TokenView(vectors.data() + t * kDim, kDim);
  }
  [[nodiscard]] std::size_t doc_length(std::size_t d) const {
    return static_cast<std::size_t>(doc_offsets[d + 1] - doc_offsets[d]);
  }

  bool operator==(const EmbeddingCollection&) const = default;
};

struct QueryEmbeddings {
  std::vector<float> vectors;

  [[nodiscard]] std::size_t n_tokens() const noexcept { return vectors.size() / kDim; }
  [[nodiscard]] TokenView token(std::size_t t) const {
    return TokenView(vectors.data() + t * kDim, kDim);
  }

  bool operator==(const QueryEmbeddings&) const = default;
};

/// qid -> (docid -> graded relevance).
struct Qrels {
  std::map<std::string, std::map<std::string, int>> judgments;

  [[nodiscard]] std::size_t n_queries() const noexcept { return judgments.size(); }
  [[nodiscard]] std::size_t n_pairs() const noexcept;
  [[nodiscard]] int grade(const std::string& qid, const std::string& docid) const;
};

// Validation. Each throws warp::Error with a distinct code per violation.
void validate_collection(const EmbeddingCollection& collection);
void validate_query(const QueryEmbeddings& query);

EmbeddingCollection load_collection(const std::filesystem::path& path);
void save_collection(const EmbeddingCollection& collection, const std::filesystem::path& path);

std::vector<QueryEmbeddings> load_queries(const std::filesystem::path& path);
void save_queries(std::span<const QueryEmbeddings> queries, const std::filesystem::path& path);

/// Whitespace-separated "qid docid grade" lines. Duplicate pairs keep the max grade.
Qrels parse_qrels(std::istream& in);
Qrels load_qrels(const std::filesystem::path& path);
void save_qrels(const Qrels& qrels, const std::filesystem::path& path);

struct SynthSpec {
  std::uint64_t seed = 42;
  std::size_t n_docs = 100;
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 8;
  std::size_t n_latent_clusters = 16;
  float noise = 0.1f;  // per-dimension stddev before normalization
};

/// Tokens are noisy copies of latent directions, L2-normalized. Pure in `spec`.
EmbeddingCollection synth_corpus(const SynthSpec& spec);

struct SynthQuerySpec {
  std::uint64_t seed = 1;
  std::size_t n_queries = 10;
  std::size_t min_tokens = 8;
  std::size_t max_tokens = 16;
  float noise = 0.1f;
};

struct SynthQueries {
  std::vector<QueryEmbeddings> queries;
  std::vector<std::uint32_t> source_docs;  // document each query was drawn from
};

/// Each query perturbs tokens of one randomly chosen source document.
SynthQueries synth_queries(const EmbeddingCollection& collection, const SynthQuerySpec& spec);

/// Exact MaxSim-sum of a query against one document of the raw collection.
double exact_maxsim(const EmbeddingCollection& collection, std::size_t doc, const QueryEmbeddings& query);

/// Document with the highest exact MaxSim-sum per query (ties: lowest id).
std::vector<std::uint32_t> nearest_documents(const EmbeddingCollection& collection,
                                             std::span<const QueryEmbeddings> queries);

/// Qrels with one relevant document (grade 1) per query: its exact nearest
/// document. qids and docids are decimal indices.
Qrels nearest_doc_qrels(const EmbeddingCollection& collection, std::span<const QueryEmbeddings> queries);

}  // namespace warp
