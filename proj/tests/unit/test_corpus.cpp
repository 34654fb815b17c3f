#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "support.hpp"
#include "warp/corpus.hpp"

using namespace warp;
using warp::test::TempDir;
using warp::test::basis;
using warp::test::error_of;

namespace {

EmbeddingCollection one_token_collection() {
  EmbeddingCollection c;
  c.doc_offsets = {0, 1};
  c.vectors = basis(0);
  return c;
}

void overwrite_bytes(const std::filesystem::path& path, std::size_t offset, const void* data, std::size_t n) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(static_cast<std::streamoff>(offset));
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

}  // namespace

TEST_CASE("single-token collection loads with one document and one token") {
  TempDir dir;
  save_collection(one_token_collection(), dir / "one.emb");
  const auto loaded = load_collection(dir / "one.emb");
  CHECK(loaded.n_docs() == 1);
  CHECK(loaded.n_tokens() == 1);
  CHECK(loaded.token(0)[0] == 1.0f);
}

TEST_CASE("empty document in the offsets is rejected") {
  TempDir dir;
  EmbeddingCollection c;
  c.doc_offsets = {0, 2, 2};
  c.vectors = basis(0);
  const auto e1 = basis(1);
  c.vectors.insert(c.vectors.end(), e1.begin(), e1.end());
  save_collection(c, dir / "empty.emb");
  CHECK(error_of([&] { load_collection(dir / "empty.emb"); }) == ErrorCode::kEmptyDocument);
  CHECK(error_of([&] { validate_collection(c); }) == ErrorCode::kEmptyDocument);
}

TEST_CASE("seed-42 synthetic collection round-trips bit-identically") {
  TempDir dir;
  const auto original = warp::test::small_corpus(42, 100);
  save_collection(original, dir / "synth.emb");
  const auto loaded = load_collection(dir / "synth.emb");
  CHECK(loaded == original);
  CHECK(std::memcmp(loaded.vectors.data(), original.vectors.data(), original.vectors.size() * sizeof(float)) == 0);
}

TEST_CASE("collection loader reports a distinct error per violation") {
  TempDir dir;
  const auto path = dir / "c.emb";

  SECTION("bad magic") {
    save_collection(one_token_collection(), path);
    overwrite_bytes(path, 0, "NOTWARP!", 8);
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kMalformedHeader);
  }
  SECTION("truncated header") {
    std::ofstream(path, std::ios::binary) << "WARPEMB1";
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kMalformedHeader);
  }
  SECTION("dimension other than 128") {
    save_collection(one_token_collection(), path);
    const std::uint32_t dim = 64;
    overwrite_bytes(path, 28, &dim, sizeof dim);
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kBadDimension);
  }
  SECTION("version") {
    save_collection(one_token_collection(), path);
    const std::uint32_t version = 9;
    overwrite_bytes(path, 8, &version, sizeof version);
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kVersionMismatch);
  }
  SECTION("non-monotone offsets") {
    EmbeddingCollection c = warp::test::small_corpus(1, 3);
    std::swap(c.doc_offsets[1], c.doc_offsets[2]);
    save_collection(c, path);
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kNonMonotoneOffsets);
  }
  SECTION("offsets not ending at n_tokens") {
    EmbeddingCollection c = warp::test::small_corpus(1, 3);
    c.doc_offsets.back() -= 1;
    save_collection(c, path);
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kCorruptOffsets);
  }
  SECTION("NaN value") {
    EmbeddingCollection c = one_token_collection();
    c.vectors[5] = std::numeric_limits<float>::quiet_NaN();
    save_collection(c, path);
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kNonFinite);
  }
  SECTION("norm violation") {
    EmbeddingCollection c = one_token_collection();
    c.vectors[0] = 0.9f;
    save_collection(c, path);
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kNormViolation);
  }
  SECTION("norm inside tolerance is accepted") {
    EmbeddingCollection c = one_token_collection();
    c.vectors[0] = 1.0005f;
    save_collection(c, path);
    CHECK_NOTHROW(load_collection(path));
  }
  SECTION("truncated payload") {
    save_collection(warp::test::small_corpus(1, 3), path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
    CHECK(error_of([&] { load_collection(path); }) == ErrorCode::kSizeMismatch);
  }
  SECTION("missing file") {
    CHECK(error_of([&] { load_collection(dir / "absent.emb"); }) == ErrorCode::kIo);
  }
}

TEST_CASE("queries: single token, length limits and round trip") {
  TempDir dir;
  const auto path = dir / "q.qry";

  SECTION("one-token query") {
    const std::vector<QueryEmbeddings> qs{warp::test::make_query({basis(0)})};
    save_queries(qs, path);
    const auto loaded = load_queries(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].n_tokens() == 1);
  }
  SECTION("33-token query is rejected") {
    std::mt19937_64 rng(5);
    const std::vector<QueryEmbeddings> qs{warp::test::random_query(rng, 33)};
    save_queries(qs, path);
    CHECK(error_of([&] { load_queries(path); }) == ErrorCode::kQueryLength);
    CHECK(error_of([&] { validate_query(qs[0]); }) == ErrorCode::kQueryLength);
  }
  SECTION("32 tokens is the maximum accepted") {
    std::mt19937_64 rng(5);
    CHECK_NOTHROW(validate_query(warp::test::random_query(rng, 32)));
  }
  SECTION("zero-token query is rejected") {
    CHECK(error_of([] { validate_query(QueryEmbeddings{}); }) == ErrorCode::kQueryLength);
  }
  SECTION("dimension mismatch") {
    QueryEmbeddings q;
    q.vectors.assign(100, 0.1f);
    CHECK(error_of([&] { validate_query(q); }) == ErrorCode::kBadDimension);
  }
  SECTION("seeded random queries round-trip bit-identically") {
    std::mt19937_64 rng(11);
    std::vector<QueryEmbeddings> qs;
    for (std::size_t n : {1, 7, 32, 16}) qs.push_back(warp::test::random_query(rng, n));
    save_queries(qs, path);
    CHECK(load_queries(path) == qs);
  }
  SECTION("trailing bytes") {
    save_queries(std::vector<QueryEmbeddings>{warp::test::make_query({basis(3)})}, path);
    std::ofstream(path, std::ios::binary | std::ios::app) << "xx";
    CHECK(error_of([&] { load_queries(path); }) == ErrorCode::kSizeMismatch);
  }
}

TEST_CASE("synthetic corpus generator") {
  SynthSpec spec;
  spec.seed = 7;
  spec.n_docs = 100;
  spec.min_tokens = 4;
  spec.max_tokens = 8;
  spec.n_latent_clusters = 16;

  SECTION("same seed gives identical collections") {
    CHECK(synth_corpus(spec) == synth_corpus(spec));
    auto other = spec;
    other.seed = 8;
    CHECK_FALSE(synth_corpus(other) == synth_corpus(spec));
  }
  SECTION("all norms are 1 within 1e-6") {
    const auto c = synth_corpus(spec);
    for (std::size_t t = 0; t < c.n_tokens(); ++t) {
      const auto v = c.token(t);
      CHECK(std::abs(std::sqrt(warp::test::dot(v, v)) - 1.0) <= 1e-6);
    }
  }
  SECTION("token count respects per-document bounds") {
    const auto c = synth_corpus(spec);
    CHECK(c.n_docs() == 100);
    CHECK(c.n_tokens() >= 400);
    CHECK(c.n_tokens() <= 800);
    for (std::size_t d = 0; d < c.n_docs(); ++d) {
      CHECK(c.doc_length(d) >= 4);
      CHECK(c.doc_length(d) <= 8);
    }
    CHECK_NOTHROW(validate_collection(c));
  }
  SECTION("invalid spec") {
    auto bad = spec;
    bad.min_tokens = 9;
    CHECK(error_of([&] { synth_corpus(bad); }) == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("qrels parsing") {
  SECTION("empty input gives empty qrels") {
    std::istringstream in("");
    const auto q = parse_qrels(in);
    CHECK(q.n_queries() == 0);
    CHECK(q.n_pairs() == 0);
  }
  SECTION("duplicate pair keeps the maximum grade") {
    std::istringstream in("q1 d1 1\nq1 d1 2");
    CHECK(parse_qrels(in).grade("q1", "d1") == 2);
    std::istringstream reversed("q1 d1 2\nq1 d1 1\n");
    CHECK(parse_qrels(reversed).grade("q1", "d1") == 2);
  }
  SECTION("three-line fixture has two queries and three pairs") {
    std::istringstream in("q1\td1\t1\nq1\td2\t0\nq2 d7 3\n");
    const auto q = parse_qrels(in);
    CHECK(q.n_queries() == 2);
    CHECK(q.n_pairs() == 3);
    CHECK(q.grade("q2", "d7") == 3);
    CHECK(q.grade("q2", "d1") == 0);
    CHECK(q.grade("q9", "d1") == 0);
  }
  SECTION("non-integer grade") {
    std::istringstream in("q1 d1 high\n");
    CHECK(error_of([&] { parse_qrels(in); }) == ErrorCode::kMalformedQrels);
    std::istringstream frac("q1 d1 1.5\n");
    CHECK(error_of([&] { parse_qrels(frac); }) == ErrorCode::kMalformedQrels);
  }
  SECTION("malformed line") {
    std::istringstream two("q1 d1\n");
    CHECK(error_of([&] { parse_qrels(two); }) == ErrorCode::kMalformedQrels);
    std::istringstream four("q1 d1 1 extra\n");
    CHECK(error_of([&] { parse_qrels(four); }) == ErrorCode::kMalformedQrels);
  }
  SECTION("save and load round trip") {
    TempDir dir;
    std::istringstream in("a x 1\na y 2\nb z 0\n");
    const auto q = parse_qrels(in);
    save_qrels(q, dir / "q.txt");
    CHECK(load_qrels(dir / "q.txt").judgments == q.judgments);
  }
}

TEST_CASE("nearest-document ground truth matches a brute-force double oracle") {
  const auto c = warp::test::small_corpus(3, 60);
  SynthQuerySpec qs;
  qs.n_queries = 12;
  const auto queries = synth_queries(c, qs).queries;
  const auto nearest = nearest_documents(c, queries);
  REQUIRE(nearest.size() == queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t d = 0; d < c.n_docs(); ++d) {
      const double s = exact_maxsim(c, d, queries[q]);
      if (s > best_score) {
        best_score = s;
        best = d;
      }
    }
    CHECK(nearest[q] == best);
  }
  const auto qrels = nearest_doc_qrels(c, queries);
  CHECK(qrels.n_queries() == queries.size());
  CHECK(qrels.grade("0", std::to_string(nearest[0])) == 1);
}
