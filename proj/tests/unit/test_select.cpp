#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "support.hpp"
#include "warp/select.hpp"

using namespace warp;
using warp::test::basis;
using warp::test::error_of;

namespace {

CentroidTable table_of(const std::vector<std::vector<float>>& rows) {
  CentroidTable t;
  for (const auto& r : rows) t.values.insert(t.values.end(), r.begin(), r.end());
  return t;
}

// Full-sort reference for probe ids and the missing estimate.
ProbeSelection full_sort_oracle(const std::vector<float>& scores, const std::vector<std::uint64_t>& sizes,
                                std::size_t n_probe, std::uint64_t t_prime) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  ProbeSelection out;
  for (std::size_t j = 0; j < n_probe; ++j) {
    out.ids.push_back(order[j]);
    out.scores.push_back(scores[order[j]]);
  }
  out.missing = scores[order.back()];
  std::uint64_t cum = 0;
  for (auto c : order) {
    cum += sizes[c];
    if (cum > t_prime) {
      out.missing = scores[c];
      break;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("centroid scores") {
  std::mt19937_64 rng(12);
  SECTION("self-similarity and orthogonality") {
    const auto v = warp::test::random_unit(rng);
    const auto table = table_of({v, basis(0), basis(1)});
    const auto q = warp::test::make_query({v, basis(1)});
    const auto s = score_centroids(q, table);
    CHECK(s.n_tokens == 2);
    CHECK(s.n_centroids == 3);
    CHECK(s.row(0)[0] == Catch::Approx(1.0).margin(1e-6));
    CHECK(s.row(1)[1] == Catch::Approx(0.0).margin(1e-6));
    CHECK(s.row(1)[2] == Catch::Approx(1.0).margin(1e-6));
  }
  SECTION("random 4x128 query against 8 centroids matches scalar dot products") {
    std::vector<std::vector<float>> rows;
    for (int i = 0; i < 8; ++i) rows.push_back(warp::test::random_unit(rng));
    const auto table = table_of(rows);
    const auto q = warp::test::random_query(rng, 4);
    const auto s = score_centroids(q, table);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t c = 0; c < 8; ++c) {
        CHECK(s.row(i)[c] == Catch::Approx(warp::test::dot(q.token(i), table.row(c))).margin(1e-6));
      }
    }
  }
}

TEST_CASE("t' from corpus size") {
  CHECK(compute_tprime(1'000'000, 50'000) == 1'000);
  CHECK(compute_tprime(100, 5) == 5);
  CHECK(compute_tprime(1, 100'000) == 1);
  CHECK(compute_tprime(2, 100'000) == 1);   // round(1.414)
  CHECK(compute_tprime(3, 100'000) == 2);   // round(1.732)
}

TEST_CASE("probe selection and missing-similarity estimate") {
  const std::vector<float> scores{0.9f, 0.8f, 0.7f, 0.5f};
  const std::vector<std::uint64_t> sizes{2, 3, 5, 10};

  SECTION("hand example") {
    const auto sel = select_probes(scores, sizes, 2, 4);
    CHECK(sel.ids == std::vector<std::uint32_t>{0, 1});
    CHECK(sel.scores == std::vector<float>{0.9f, 0.8f});
    CHECK(sel.missing == 0.8f);
    CHECK(sel.walked == 2);
  }
  SECTION("t'=0 takes the top score") {
    CHECK(select_probes(scores, sizes, 1, 0).missing == 0.9f);
  }
  SECTION("t' at or beyond the total falls back to the minimum") {
    CHECK(select_probes(scores, sizes, 1, 20).missing == 0.5f);
    CHECK(select_probes(scores, sizes, 1, 1000).missing == 0.5f);
  }
  SECTION("threshold must be strictly exceeded") {
    CHECK(select_probes(scores, sizes, 1, 5).missing == 0.7f);  // 2, 5 (not > 5), 10
  }
  SECTION("probes and threshold walk independently") {
    const auto sel = select_probes(scores, sizes, 3, 1);
    CHECK(sel.ids == std::vector<std::uint32_t>{0, 1, 2});
    CHECK(sel.missing == 0.9f);
    CHECK(sel.walked == 3);
  }
  SECTION("ties rank lower ids first") {
    const std::vector<float> tied{0.5f, 0.7f, 0.5f, 0.7f};
    const auto sel = select_probes(tied, std::vector<std::uint64_t>{1, 1, 1, 1}, 4, 100);
    CHECK(sel.ids == std::vector<std::uint32_t>{1, 3, 0, 2});
  }
  SECTION("n_probe = K selects every cluster") {
    const auto sel = select_probes(scores, sizes, 4, 4);
    CHECK(sel.ids == std::vector<std::uint32_t>{0, 1, 2, 3});
  }
  SECTION("invalid n_probe") {
    CHECK(error_of([&] { select_probes(scores, sizes, 0, 1); }) == ErrorCode::kInvalidArgument);
    CHECK(error_of([&] { select_probes(scores, sizes, 5, 1); }) == ErrorCode::kInvalidArgument);
  }
  SECTION("random rows agree with a full-sort oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t k = 1 + rng() % 200;
      std::vector<float> row(k);
      std::vector<std::uint64_t> sz(k);
      for (std::size_t c = 0; c < k; ++c) {
        // Coarse grid so ties are common.
        row[c] = static_cast<float>(static_cast<int>(rng() % 21) - 10) / 10.0f;
        sz[c] = rng() % 40;
      }
      const std::size_t n_probe = 1 + rng() % k;
      const std::uint64_t total = std::accumulate(sz.begin(), sz.end(), std::uint64_t{0});
      const std::uint64_t t = rng() % (total + 10);
      const auto got = select_probes(row, sz, n_probe, t);
      const auto want = full_sort_oracle(row, sz, n_probe, t);
      REQUIRE(got.ids == want.ids);
      REQUIRE(got.scores == want.scores);
      REQUIRE(got.missing == want.missing);
      REQUIRE(got.walked <= k);
      REQUIRE(got.walked >= n_probe);
    }
  }
  SECTION("probe set is invariant under relabeling clusters") {
    std::mt19937_64 rng(30);
    std::vector<float> row(64);
    std::vector<std::uint64_t> sz(64);
    for (std::size_t c = 0; c < 64; ++c) {
      row[c] = std::uniform_real_distribution<float>(-1, 1)(rng);
      sz[c] = 1 + rng() % 10;
    }
    std::vector<std::uint32_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0u);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<float> prow(64);
    std::vector<std::uint64_t> psz(64);
    for (std::size_t c = 0; c < 64; ++c) {
      prow[perm[c]] = row[c];
      psz[perm[c]] = sz[c];
    }
    const auto a = select_probes(row, sz, 8, 50);
    const auto b = select_probes(prow, psz, 8, 50);
    for (std::size_t j = 0; j < 8; ++j) CHECK(perm[a.ids[j]] == b.ids[j]);
    CHECK(a.missing == b.missing);
  }
}

TEST_CASE("missing estimates prefix sums") {
  SECTION("single token") {
    const MissingEstimates m({0.25f});
    CHECK(m.prefix(0) == 0);
    CHECK(m.prefix(1) == to_fixed(0.25f));
    CHECK(m.sum(0, 0) == to_fixed(0.25f));
  }
  SECTION("range sums equal direct sums") {
    const MissingEstimates m({0.1f, -0.2f, 0.3f, 0.4f});
    CHECK(m.sum(1, 2) == to_fixed(-0.2f) + to_fixed(0.3f));
    CHECK(m.sum(0, 3) == m.prefix(4));
    CHECK(from_fixed(m.prefix(4)) == Catch::Approx(0.6f).margin(1e-6));
  }
}

TEST_CASE("query plan over a synthetic index") {
  const auto corpus = warp::test::small_corpus(42, 300);
  IndexConfig cfg;
  cfg.n_centroids = 32;
  const auto index = build_index(corpus, cfg);
  std::mt19937_64 rng(2);
  const auto q = warp::test::random_query(rng, 9);

  SECTION("counts one centroid score per (token, centroid) and matches the oracle per token") {
    SearchParams p;
    p.n_probe = 5;
    const auto pl = plan(q, index, p);
    CHECK(pl.centroid_scores_computed == 9 * 32);
    CHECK(pl.t_prime == compute_tprime(index.n_tokens(), kDefaultTPrimeMax));
    const auto sizes = index.cluster_sizes();
    REQUIRE(pl.tokens.size() == 9);
    REQUIRE(pl.missing.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
      const auto row = pl.scores.row(i);
      const auto want = full_sort_oracle(std::vector<float>(row.begin(), row.end()), sizes, 5, pl.t_prime);
      CHECK(pl.tokens[i].ids == want.ids);
      CHECK(pl.missing.values()[i] == want.missing);
    }
  }
  SECTION("n_probe = K probes every cluster for every token") {
    SearchParams p;
    p.n_probe = 32;
    const auto pl = plan(q, index, p);
    for (const auto& t : pl.tokens) {
      auto ids = t.ids;
      std::sort(ids.begin(), ids.end());
      std::vector<std::uint32_t> all(32);
      std::iota(all.begin(), all.end(), 0u);
      CHECK(ids == all);
    }
  }
  SECTION("explicit t' overrides the automatic value") {
    SearchParams p;
    p.t_prime = 7;
    p.n_probe = 4;
    CHECK(plan(q, index, p).t_prime == 7);
  }
  SECTION("parameter validation") {
    SearchParams p;
    p.n_probe = 33;
    CHECK(error_of([&] { plan(q, index, p); }) == ErrorCode::kInvalidArgument);
    p.n_probe = 4;
    p.k = 0;
    CHECK(error_of([&] { p.validate(32); }) == ErrorCode::kInvalidArgument);
    p.k = 1;
    p.t_prime = 0;
    CHECK(error_of([&] { p.validate(32); }) == ErrorCode::kInvalidArgument);
    p.t_prime.reset();
    p.threads = 0;
    CHECK(error_of([&] { p.validate(32); }) == ErrorCode::kInvalidArgument);
  }
}
