#include "warp/kernel.hpp"

#include "warp/detail/selective_sum.hpp"
#include "warp/error.hpp"

namespace warp {

bool Stride::well_formed() const noexcept {
  if (keys.size() != values.size()) return false;
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i] <= keys[i - 1]) return false;
  }
  return true;
}

Upsilon build_upsilon(const QueryEmbeddings& query, const BucketWeights& weights) {
  Upsilon out;
  out.bits = weights.bits;
  out.n_tokens = query.n_tokens();
  const std::size_t n_buckets = weights.representatives.size();
  if (n_buckets != out.n_buckets()) fail(ErrorCode::kInvalidArgument, "bucket weights have the wrong shape");
  out.table.resize(out.n_tokens * kDim * n_buckets);
  float* cell = out.table.data();
  for (float q : query.vectors) {
    for (float omega : weights.representatives) *cell++ = q * omega;
  }
  return out;
}

void score_cluster_into(const CompressedIndex& index, std::size_t cluster, std::size_t token,
                        float centroid_score, const Upsilon& upsilon, Stride& out) {
  if (cluster >= index.n_centroids()) {
    fail(ErrorCode::kOutOfRange, "cluster " + std::to_string(cluster) + " >= K");
  }
  if (token >= upsilon.n_tokens) fail(ErrorCode::kOutOfRange, "query token out of range");
  if (upsilon.bits != index.bits) fail(ErrorCode::kInvalidArgument, "upsilon built for a different b");
  out.clear();
  const std::size_t begin = index.cluster_offsets[cluster];
  const std::size_t n = index.cluster_size(cluster);
  const std::size_t stride = index.code_bytes_per_token();
  detail::selective_sum<float>(std::span(index.codes).subspan(begin * stride, n * stride),
                               std::span(index.doc_ids).subspan(begin, n), index.bits,
                               upsilon.token(token), centroid_score, out.keys, out.values);
}

Stride score_cluster(const CompressedIndex& index, std::size_t cluster, std::size_t token,
                     float centroid_score, const Upsilon& upsilon) {
  Stride out;
  score_cluster_into(index, cluster, token, centroid_score, upsilon, out);
  return out;
}

}  // namespace warp
