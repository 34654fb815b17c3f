#include "warp/reduce.hpp"

#include <algorithm>
#include <map>

#include "warp/error.hpp"

namespace warp {

void merge_max_into(const Stride& lhs, const Stride& rhs, Stride& out) {
  out.clear();
  out.keys.reserve(lhs.size() + rhs.size());
  out.values.reserve(lhs.size() + rhs.size());
  std::size_t i = 0, j = 0;
  while (i < lhs.size() && j < rhs.size()) {
    if (lhs.keys[i] < rhs.keys[j]) {
      out.keys.push_back(lhs.keys[i]);
      out.values.push_back(lhs.values[i++]);
    } else if (rhs.keys[j] < lhs.keys[i]) {
      out.keys.push_back(rhs.keys[j]);
      out.values.push_back(rhs.values[j++]);
    } else {
      out.keys.push_back(lhs.keys[i]);
      out.values.push_back(std::max(lhs.values[i++], rhs.values[j++]));
    }
  }
  for (; i < lhs.size(); ++i) {
    out.keys.push_back(lhs.keys[i]);
    out.values.push_back(lhs.values[i]);
  }
  for (; j < rhs.size(); ++j) {
    out.keys.push_back(rhs.keys[j]);
    out.values.push_back(rhs.values[j]);
  }
}

Stride merge_max(const Stride& lhs, const Stride& rhs) {
  Stride out;
  merge_max_into(lhs, rhs, out);
  return out;
}

Stride reduce_token_level(std::span<const Stride> strides) {
  std::vector<Stride> level(strides.begin(), strides.end());
  std::vector<Stride> scratch;
  return reduce_token_level(level, scratch);
}

Stride reduce_token_level(std::vector<Stride>& level, std::vector<Stride>& next) {
  if (level.empty()) return {};
  if (next.size() < (level.size() + 1) / 2) next.resize((level.size() + 1) / 2);
  std::size_t width = level.size();
  while (width > 1) {
    const std::size_t merged = (width + 1) / 2;
    for (std::size_t i = 0; i + 1 < width; i += 2) merge_max_into(level[i], level[i + 1], next[i / 2]);
    if (width % 2 == 1) std::swap(next[merged - 1], level[width - 1]);
    std::swap(level, next);
    width = merged;
  }
  return std::move(level.front());
}

CoveredStride cover_token(const Stride& stride, std::size_t token) {
  CoveredStride out;
  out.first = token;
  out.last = token;
  out.keys = stride.keys;
  out.values.reserve(stride.size());
  for (float v : stride.values) out.values.push_back(to_fixed(v));
  return out;
}

void merge_document_into(const CoveredStride& lhs, const CoveredStride& rhs,
                         const MissingEstimates& missing, CoveredStride& out) {
  if (lhs.last + 1 != rhs.first || lhs.first > lhs.last || rhs.first > rhs.last ||
      rhs.last >= missing.size()) {
    fail(ErrorCode::kInvalidArgument, "document-level merge needs adjacent coverage intervals");
  }
  const FixedScore lhs_missing = missing.sum(lhs.first, lhs.last);
  const FixedScore rhs_missing = missing.sum(rhs.first, rhs.last);

  out.first = lhs.first;
  out.last = rhs.last;
  out.keys.clear();
  out.values.clear();
  out.keys.reserve(lhs.keys.size() + rhs.keys.size());
  out.values.reserve(lhs.keys.size() + rhs.keys.size());
  std::size_t i = 0, j = 0;
  while (i < lhs.keys.size() || j < rhs.keys.size()) {
    if (j == rhs.keys.size() || (i < lhs.keys.size() && lhs.keys[i] < rhs.keys[j])) {
      out.keys.push_back(lhs.keys[i]);
      out.values.push_back(lhs.values[i++] + rhs_missing);
    } else if (i == lhs.keys.size() || rhs.keys[j] < lhs.keys[i]) {
      out.keys.push_back(rhs.keys[j]);
      out.values.push_back(lhs_missing + rhs.values[j++]);
    } else {
      out.keys.push_back(lhs.keys[i]);
      out.values.push_back(lhs.values[i++] + rhs.values[j++]);
    }
  }
}

namespace {

Stride to_stride(const CoveredStride& covered) {
  Stride out;
  out.keys = covered.keys;
  out.values.reserve(covered.values.size());
  for (FixedScore v : covered.values) out.values.push_back(from_fixed(v));
  return out;
}

Stride reduce_balanced(std::span<const Stride> token_strides, const MissingEstimates& missing) {
  // Two scratch levels, swapped after every round of pairwise merges.
  std::vector<CoveredStride> current;
  std::vector<CoveredStride> next;
  current.reserve(token_strides.size());
  for (std::size_t t = 0; t < token_strides.size(); ++t) current.push_back(cover_token(token_strides[t], t));
  next.resize((current.size() + 1) / 2);

  std::size_t width = current.size();
  while (width > 1) {
    const std::size_t merged = (width + 1) / 2;
    for (std::size_t i = 0; i + 1 < width; i += 2) {
      merge_document_into(current[i], current[i + 1], missing, next[i / 2]);
    }
    if (width % 2 == 1) std::swap(next[merged - 1], current[width - 1]);
    std::swap(current, next);
    width = merged;
  }
  return to_stride(current.front());
}

}  // namespace

Stride reduce_document_level(std::span<const Stride> token_strides, const MissingEstimates& missing,
                             MergeTree tree) {
  if (token_strides.size() != missing.size()) {
    fail(ErrorCode::kInvalidArgument, "token strides and missing estimates cover different token counts");
  }
  if (token_strides.empty()) return {};

  const std::size_t n = token_strides.size();
  switch (tree) {
    case MergeTree::kBalanced:
      return reduce_balanced(token_strides, missing);
    case MergeTree::kLeftLeaning: {
      CoveredStride acc = cover_token(token_strides[0], 0);
      CoveredStride scratch;
      for (std::size_t t = 1; t < n; ++t) {
        merge_document_into(acc, cover_token(token_strides[t], t), missing, scratch);
        std::swap(acc, scratch);
      }
      return to_stride(acc);
    }
    case MergeTree::kRightLeaning: {
      CoveredStride acc = cover_token(token_strides[n - 1], n - 1);
      CoveredStride scratch;
      for (std::size_t t = n - 1; t-- > 0;) {
        merge_document_into(cover_token(token_strides[t], t), acc, missing, scratch);
        std::swap(acc, scratch);
      }
      return to_stride(acc);
    }
  }
  fail(ErrorCode::kInternal, "unknown merge tree");
}

RankedResults top_k(const Stride& stride, std::size_t k) {
  if (k < 1) fail(ErrorCode::kInvalidArgument, "top_k: k must be >= 1");
  // Min-heap on rank: the front is the worst of the kept entries.
  RankedResults heap;
  heap.reserve(std::min(k, stride.size()));
  for (std::size_t i = 0; i < stride.size(); ++i) {
    const ScoredDoc entry{stride.keys[i], stride.values[i]};
    if (heap.size() < k) {
      heap.push_back(entry);
      std::push_heap(heap.begin(), heap.end(), ranks_before);
    } else if (ranks_before(entry, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), ranks_before);
      heap.back() = entry;
      std::push_heap(heap.begin(), heap.end(), ranks_before);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), ranks_before);
  return heap;
}

RankedResults oracle_score(const CompressedIndex& index, const QueryEmbeddings& query,
                           const ProbePlan& plan) {
  const std::size_t n = query.n_tokens();
  if (plan.tokens.size() != n || plan.missing.size() != n) {
    fail(ErrorCode::kInvalidArgument, "plan does not match query");
  }
  struct Row {
    std::vector<double> entries;
    std::vector<bool> retrieved;
  };
  std::map<std::uint32_t, Row> candidates;

  for (std::size_t i = 0; i < n; ++i) {
    const auto q = query.token(i);
    for (std::uint32_t cluster : plan.tokens[i].ids) {
      for (std::size_t pos = 0; pos < index.cluster_size(cluster); ++pos) {
        const auto d = decompress_explicit(index, cluster, pos);
        double sim = 0.0;
        for (std::size_t k = 0; k < kDim; ++k) sim += static_cast<double>(q[k]) * d[k];
        const std::uint32_t doc = index.doc_ids[index.cluster_offsets[cluster] + pos];
        auto [it, inserted] = candidates.try_emplace(doc);
        Row& row = it->second;
        if (inserted) {
          row.entries.assign(n, 0.0);
          row.retrieved.assign(n, false);
        }
        if (!row.retrieved[i] || sim > row.entries[i]) row.entries[i] = sim;
        row.retrieved[i] = true;
      }
    }
  }

  RankedResults out;
  out.reserve(candidates.size());
  for (const auto& [doc, row] : candidates) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += row.retrieved[i] ? row.entries[i] : static_cast<double>(plan.missing.values()[i]);
    }
    out.push_back({doc, static_cast<float>(total)});
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

}  // namespace warp
