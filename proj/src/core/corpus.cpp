#include "warp/corpus.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "warp/error.hpp"

namespace warp {

namespace {

constexpr std::array<char, 8> kCollectionMagic{'W', 'A', 'R', 'P', 'E', 'M', 'B', '1'};
constexpr std::array<char, 8> kQueryMagic{'W', 'A', 'R', 'P', 'Q', 'R', 'Y', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kCollectionHeaderBytes = 32;
constexpr std::size_t kQueryHeaderBytes = 24;

void validate_rows(std::span<const float> vectors, const char* what) {
  const std::size_t rows = vectors.size() / kDim;
  for (std::size_t r = 0; r < rows; ++r) {
    double sq = 0.0;
    for (std::size_t d = 0; d < kDim; ++d) {
      const float v = vectors[r * kDim + d];
      if (!std::isfinite(v)) {
        fail(ErrorCode::kNonFinite,
             std::string(what) + " row " + std::to_string(r) + " has a non-finite value");
      }
      sq += static_cast<double>(v) * v;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
      fail(ErrorCode::kNormViolation,
           std::string(what) + " row " + std::to_string(r) + " has norm " +
               std::to_string(std::sqrt(sq)));
    }
  }
}

void check_magic(const std::array<char, 8>& got, const std::array<char, 8>& want,
                 const std::filesystem::path& path) {
  if (got != want) fail(ErrorCode::kMalformedHeader, "bad magic in " + path.string());
}

void normalize(std::span<float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
  for (float& x : v) x = static_cast<float>(x * inv);
}

}  // namespace

std::size_t Qrels::n_pairs() const noexcept {
  std::size_t n = 0;
  for (const auto& [qid, docs] : judgments) n += docs.size();
  return n;
}

int Qrels::grade(const std::string& qid, const std::string& docid) const {
  auto q = judgments.find(qid);
  if (q == judgments.end()) return 0;
  auto d = q->second.find(docid);
  return d == q->second.end() ? 0 : d->second;
}

void validate_collection(const EmbeddingCollection& collection) {
  const auto& offsets = collection.doc_offsets;
  if (offsets.empty() || offsets.front() != 0) {
    fail(ErrorCode::kCorruptOffsets, "doc_offsets must start at 0");
  }
  if (collection.vectors.size() % kDim != 0) {
    fail(ErrorCode::kBadDimension, "vector buffer is not a multiple of 128 floats");
  }
  for (std::size_t d = 0; d + 1 < offsets.size(); ++d) {
    if (offsets[d + 1] == offsets[d]) {
      fail(ErrorCode::kEmptyDocument, "empty document " + std::to_string(d));
    }
    if (offsets[d + 1] < offsets[d]) {
      fail(ErrorCode::kNonMonotoneOffsets,
           "doc_offsets decrease at document " + std::to_string(d));
    }
  }
  if (offsets.back() != collection.n_tokens()) {
    fail(ErrorCode::kCorruptOffsets, "doc_offsets do not end at n_tokens");
  }
  validate_rows(collection.vectors, "token");
}

void validate_query(const QueryEmbeddings& query) {
  if (query.vectors.size() % kDim != 0) {
    fail(ErrorCode::kBadDimension, "query buffer is not a multiple of 128 floats");
  }
  const std::size_t n = query.n_tokens();
  if (n == 0 || n > kQueryMaxLen) {
    fail(ErrorCode::kQueryLength,
         "query has " + std::to_string(n) + " tokens; expected 1.." + std::to_string(kQueryMaxLen));
  }
  validate_rows(query.vectors, "query token");
}

EmbeddingCollection load_collection(const std::filesystem::path& path) {
  const auto size = detail::file_size(path);
  if (size < kCollectionHeaderBytes) fail(ErrorCode::kMalformedHeader, "truncated header");

  detail::BinaryReader in(path);
  std::array<char, 8> magic{};
  in.bytes(magic.data(), magic.size(), ErrorCode::kMalformedHeader);
  check_magic(magic, kCollectionMagic, path);
  const auto version = in.scalar<std::uint32_t>(ErrorCode::kMalformedHeader);
  const auto n_docs = in.scalar<std::uint64_t>(ErrorCode::kMalformedHeader);
  const auto n_tokens = in.scalar<std::uint64_t>(ErrorCode::kMalformedHeader);
  const auto dim = in.scalar<std::uint32_t>(ErrorCode::kMalformedHeader);
  if (version != kFormatVersion) {
    fail(ErrorCode::kVersionMismatch, "unsupported collection version " + std::to_string(version));
  }
  if (dim != kDim) fail(ErrorCode::kBadDimension, "dimension " + std::to_string(dim) + " != 128");

  // Checked before allocating so a corrupt header cannot request huge buffers.
  const std::uintmax_t expected = kCollectionHeaderBytes + (n_docs + 1) * sizeof(std::uint64_t) +
                                  n_tokens * kDim * sizeof(float);
  if (n_docs > size || n_tokens > size || expected != size) {
    fail(ErrorCode::kSizeMismatch, "collection file size does not match header");
  }

  EmbeddingCollection collection;
  collection.doc_offsets = in.array<std::uint64_t>(n_docs + 1, ErrorCode::kSizeMismatch);
  collection.vectors = in.array<float>(n_tokens * kDim, ErrorCode::kSizeMismatch);
  validate_collection(collection);
  return collection;
}

void save_collection(const EmbeddingCollection& collection, const std::filesystem::path& path) {
  detail::BinaryWriter out(path);
  out.bytes(kCollectionMagic.data(), kCollectionMagic.size());
  out.scalar<std::uint32_t>(kFormatVersion);
  out.scalar<std::uint64_t>(collection.n_docs());
  out.scalar<std::uint64_t>(collection.n_tokens());
  out.scalar<std::uint32_t>(kDim);
  out.array<std::uint64_t>(collection.doc_offsets);
  out.array<float>(collection.vectors);
  out.close();
}

std::vector<QueryEmbeddings> load_queries(const std::filesystem::path& path) {
  const auto size = detail::file_size(path);
  if (size < kQueryHeaderBytes) fail(ErrorCode::kMalformedHeader, "truncated header");

  detail::BinaryReader in(path);
  std::array<char, 8> magic{};
  in.bytes(magic.data(), magic.size(), ErrorCode::kMalformedHeader);
  check_magic(magic, kQueryMagic, path);
  const auto version = in.scalar<std::uint32_t>(ErrorCode::kMalformedHeader);
  const auto n_queries = in.scalar<std::uint64_t>(ErrorCode::kMalformedHeader);
  const auto dim = in.scalar<std::uint32_t>(ErrorCode::kMalformedHeader);
  if (version != kFormatVersion) {
    fail(ErrorCode::kVersionMismatch, "unsupported query file version " + std::to_string(version));
  }
  if (dim != kDim) fail(ErrorCode::kBadDimension, "dimension " + std::to_string(dim) + " != 128");
  if (n_queries > size) fail(ErrorCode::kSizeMismatch, "query count exceeds file size");

  std::vector<QueryEmbeddings> queries;
  queries.reserve(n_queries);
  for (std::uint64_t q = 0; q < n_queries; ++q) {
    const auto n_tokens = in.scalar<std::uint32_t>(ErrorCode::kSizeMismatch);
    if (n_tokens == 0 || n_tokens > kQueryMaxLen) {
      fail(ErrorCode::kQueryLength, "query " + std::to_string(q) + " has " +
                                        std::to_string(n_tokens) + " tokens");
    }
    QueryEmbeddings query;
    query.vectors = in.array<float>(std::size_t{n_tokens} * kDim, ErrorCode::kSizeMismatch);
    validate_query(query);
    queries.push_back(std::move(query));
  }
  if (!in.at_eof()) fail(ErrorCode::kSizeMismatch, "trailing bytes after last query");
  return queries;
}

void save_queries(std::span<const QueryEmbeddings> queries, const std::filesystem::path& path) {
  detail::BinaryWriter out(path);
  out.bytes(kQueryMagic.data(), kQueryMagic.size());
  out.scalar<std::uint32_t>(kFormatVersion);
  out.scalar<std::uint64_t>(queries.size());
  out.scalar<std::uint32_t>(kDim);
  for (const auto& q : queries) {
    out.scalar<std::uint32_t>(static_cast<std::uint32_t>(q.n_tokens()));
    out.array<float>(q.vectors);
  }
  out.close();
}

Qrels parse_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string qid, docid, grade_text, extra;
    if (!(fields >> qid >> docid >> grade_text) || (fields >> extra)) {
      fail(ErrorCode::kMalformedQrels, "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    int grade = 0;
    std::size_t used = 0;
    try {
      grade = std::stoi(grade_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != grade_text.size() || grade < 0) {
      fail(ErrorCode::kMalformedQrels,
           "line " + std::to_string(line_no) + ": grade '" + grade_text + "' is not a non-negative integer");
    }
    auto [it, inserted] = qrels.judgments[qid].try_emplace(docid, grade);
    if (!inserted) it->second = std::max(it->second, grade);
  }
  return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open qrels: " + path.string());
  return parse_qrels(in);
}

void save_qrels(const Qrels& qrels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  for (const auto& [qid, docs] : qrels.judgments) {
    for (const auto& [docid, grade] : docs) out << qid << '\t' << docid << '\t' << grade << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

EmbeddingCollection synth_corpus(const SynthSpec& spec) {
  if (spec.n_docs < 1 || spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens ||
      spec.n_latent_clusters < 1) {
    fail(ErrorCode::kInvalidArgument, "synth_corpus: invalid spec");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);

  std::vector<float> latent(spec.n_latent_clusters * kDim);
  for (std::size_t c = 0; c < spec.n_latent_clusters; ++c) {
    auto row = std::span(latent).subspan(c * kDim, kDim);
    for (float& x : row) x = gauss(rng);
    normalize(row);
  }

  std::uniform_int_distribution<std::size_t> length(spec.min_tokens, spec.max_tokens);
  std::uniform_int_distribution<std::size_t> topic(0, spec.n_latent_clusters - 1);

  EmbeddingCollection collection;
  collection.doc_offsets.reserve(spec.n_docs + 1);
  for (std::size_t d = 0; d < spec.n_docs; ++d) {
    const std::size_t n = length(rng);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t c = topic(rng);
      const std::size_t start = collection.vectors.size();
      collection.vectors.resize(start + kDim);
      auto row = std::span(collection.vectors).subspan(start, kDim);
      for (std::size_t i = 0; i < kDim; ++i) row[i] = latent[c * kDim + i] + spec.noise * gauss(rng);
      normalize(row);
    }
    collection.doc_offsets.push_back(collection.doc_offsets.back() + n);
  }
  return collection;
}

SynthQueries synth_queries(const EmbeddingCollection& collection, const SynthQuerySpec& spec) {
  if (spec.min_tokens < 1 || spec.max_tokens > kQueryMaxLen || spec.max_tokens < spec.min_tokens ||
      collection.n_docs() == 0) {
    fail(ErrorCode::kInvalidArgument, "synth_queries: invalid spec");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::uniform_int_distribution<std::size_t> pick_doc(0, collection.n_docs() - 1);
  std::uniform_int_distribution<std::size_t> length(spec.min_tokens, spec.max_tokens);

  SynthQueries out;
  for (std::size_t q = 0; q < spec.n_queries; ++q) {
    const std::size_t doc = pick_doc(rng);
    const std::size_t n = length(rng);
    std::uniform_int_distribution<std::size_t> pick_token(collection.doc_offsets[doc],
                                                          collection.doc_offsets[doc + 1] - 1);
    QueryEmbeddings query;
    query.vectors.resize(n * kDim);
    for (std::size_t t = 0; t < n; ++t) {
      const auto src = collection.token(pick_token(rng));
      auto row = std::span(query.vectors).subspan(t * kDim, kDim);
      for (std::size_t i = 0; i < kDim; ++i) row[i] = src[i] + spec.noise * gauss(rng);
      normalize(row);
    }
    out.queries.push_back(std::move(query));
    out.source_docs.push_back(static_cast<std::uint32_t>(doc));
  }
  return out;
}

double exact_maxsim(const EmbeddingCollection& collection, std::size_t doc,
                    const QueryEmbeddings& query) {
  double total = 0.0;
  for (std::size_t i = 0; i < query.n_tokens(); ++i) {
    const auto q = query.token(i);
    double best = -std::numeric_limits<double>::infinity();
    for (auto t = collection.doc_offsets[doc]; t < collection.doc_offsets[doc + 1]; ++t) {
      const auto d = collection.token(t);
      double dot = 0.0;
      for (std::size_t k = 0; k < kDim; ++k) dot += static_cast<double>(q[k]) * d[k];
      best = std::max(best, dot);
    }
    total += best;
  }
  return total;
}

std::vector<std::uint32_t> nearest_documents(const EmbeddingCollection& collection,
                                             std::span<const QueryEmbeddings> queries) {
  using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> tokens(collection.vectors.data(),
                                           static_cast<Eigen::Index>(collection.n_tokens()), kDim);
  std::vector<std::uint32_t> nearest;
  nearest.reserve(queries.size());
  RowMatrix sims;
  for (const auto& query : queries) {
    const Eigen::Map<const RowMatrix> q(query.vectors.data(), static_cast<Eigen::Index>(query.n_tokens()), kDim);
    sims.noalias() = q * tokens.transpose();
    double best_score = -std::numeric_limits<double>::infinity();
    std::uint32_t best_doc = 0;
    for (std::size_t d = 0; d < collection.n_docs(); ++d) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < sims.rows(); ++i) {
        const auto begin = static_cast<Eigen::Index>(collection.doc_offsets[d]);
        const auto len = static_cast<Eigen::Index>(collection.doc_length(d));
        total += sims.row(i).segment(begin, len).maxCoeff();
      }
      if (total > best_score) {
        best_score = total;
        best_doc = static_cast<std::uint32_t>(d);
      }
    }
    nearest.push_back(best_doc);
  }
  return nearest;
}

Qrels nearest_doc_qrels(const EmbeddingCollection& collection, std::span<const QueryEmbeddings> queries) {
  const auto nearest = nearest_documents(collection, queries);
  Qrels qrels;
  for (std::size_t q = 0; q < nearest.size(); ++q) {
    qrels.judgments[std::to_string(q)][std::to_string(nearest[q])] = 1;
  }
  return qrels;
}

}  // namespace warp
