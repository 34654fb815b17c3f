#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "warp/corpus.hpp"
#include "warp/error.hpp"
#include "warp/index.hpp"

namespace warp::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "warp") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<float> basis(std::size_t axis) {
  std::vector<float> v(kDim, 0.0f);
  v[axis] = 1.0f;
  return v;
}

inline std::vector<float> random_unit(std::mt19937_64& rng) {
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<float> v(kDim);
  double norm = 0.0;
  for (float& x : v) {
    x = gauss(rng);
    norm += static_cast<double>(x) * x;
  }
  const float inv = static_cast<float>(1.0 / std::sqrt(norm));
  for (float& x : v) x *= inv;
  return v;
}

inline QueryEmbeddings make_query(const std::vector<std::vector<float>>& rows) {
  QueryEmbeddings q;
  for (const auto& r : rows) q.vectors.insert(q.vectors.end(), r.begin(), r.end());
  return q;
}

inline QueryEmbeddings random_query(std::mt19937_64& rng, std::size_t n_tokens) {
  std::vector<std::vector<float>> rows;
  for (std::size_t i = 0; i < n_tokens; ++i) rows.push_back(random_unit(rng));
  return make_query(rows);
}

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

/// Seeded synthetic collection of a given document count (4..8 tokens each).
inline EmbeddingCollection small_corpus(std::uint64_t seed = 42, std::size_t n_docs = 100) {
  SynthSpec spec;
  spec.seed = seed;
  spec.n_docs = n_docs;
  return synth_corpus(spec);
}

template <class Fn>
ErrorCode error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

}  // namespace warp::test
