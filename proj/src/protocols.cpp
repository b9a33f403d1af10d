// Copyright 2026 The vecmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vecmpc/protocols.hpp"

#include <string>

namespace vecmpc {

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::kDot: return "dot";
    case Metric::kCosine: return "cosine";
    case Metric::kSqEuclidean: return "sq_euclidean";
  }
  return "unknown";
}

Metric parse_metric(const std::string& name) {
  if (name == "dot") return Metric::kDot;
  if (name == "cosine" || name == "cos") return Metric::kCosine;
  if (name == "sq_euclidean" || name == "euclidean" || name == "l2") return Metric::kSqEuclidean;
  throw ParameterError("unknown metric '" + name + "'");
}

MatrixView MatrixView::columns(size_t offset, size_t width) const {
  if (offset + width > cols) throw DimensionError("column slice out of range");
  return {data + offset, rows, width, stride};
}

namespace {

void check_query(std::span<const Fp> q, const MatrixView& db, const PartyContext& ctx) {
  if (q.size() != db.cols) {
    throw DimensionError("query has " + std::to_string(q.size()) + " entries, rows have " +
                         std::to_string(db.cols));
  }
  if (q.size() > ctx.budget().max_sum_length) {
    throw ParameterError("dimension exceeds the field headroom");
  }
}

// Degree-2t, precision-2f products summed locally. Higher is closer.
std::vector<Fp> local_scores(Metric metric, std::span<const Fp> q, const MatrixView& db) {
  std::vector<Fp> local(db.rows);
  if (metric != Metric::kSqEuclidean) {
    for (size_t i = 0; i < db.rows; ++i) local[i] = dot_mod(q, db.row(i));
    return local;
  }
  for (size_t i = 0; i < db.rows; ++i) {
    const auto row = db.row(i);
    WideAccumulator acc;
    for (size_t j = 0; j < q.size(); ++j) {
      const Fp diff = q[j] - row[j];
      acc.add_product(diff, diff);
    }
    local[i] = -acc.result();
  }
  return local;
}

}  // namespace

ShareVector dot_scores(PartyContext& ctx, std::span<const Fp> q, const MatrixView& db) {
  check_query(q, db, ctx);
  return reduce_truncate(ctx, local_scores(Metric::kDot, q, db));
}

ShareVector cosine_scores(PartyContext& ctx, std::span<const Fp> q, const MatrixView& db) {
  return dot_scores(ctx, q, db);
}

ShareVector sq_euclidean_distances(PartyContext& ctx, std::span<const Fp> q,
                                   const MatrixView& db) {
  check_query(q, db, ctx);
  std::vector<Fp> local = local_scores(Metric::kSqEuclidean, q, db);
  for (Fp& v : local) v = -v;
  return reduce_truncate(ctx, local);
}

ShareVector similarity_scores(PartyContext& ctx, Metric metric, std::span<const Fp> q,
                              const MatrixView& db) {
  switch (metric) {
    case Metric::kDot:
      return dot_scores(ctx, q, db);
    case Metric::kCosine:
      return cosine_scores(ctx, q, db);
    case Metric::kSqEuclidean: {
      ShareVector d = sq_euclidean_distances(ctx, q, db);
      for (Fp& v : d) v = -v;
      return d;
    }
  }
  throw ParameterError("unknown metric");
}

ShareVector ranking_scores(PartyContext& ctx, Metric metric, std::span<const Fp> q,
                           const MatrixView& db) {
  check_query(q, db, ctx);
  return reduce_degree(ctx, local_scores(metric, q, db));
}

Fp precision_lift(const FixedPointCodec& codec) { return Fp(uint64_t{1} << codec.frac_bits); }

Fp topk_sentinel(const FixedPointCodec& codec, Precision precision) {
  const Fp s = codec.encode(-codec.max_magnitude);
  return precision == Precision::kDouble ? s * precision_lift(codec) : s;
}

namespace {

int value_bits(const PartyContext& ctx, Precision precision) {
  return precision == Precision::kDouble ? ctx.budget().rank_value_bits
                                         : ctx.budget().compare_value_bits;
}

}  // namespace

ArgmaxResult argmax_with_max(PartyContext& ctx, std::span<const Fp> x, Precision precision) {
  if (x.empty()) throw ParameterError("argmax of an empty vector");
  std::vector<std::vector<Fp>> level_bits;
  std::vector<size_t> level_sizes;
  std::vector<Fp> cur(x.begin(), x.end());
  while (cur.size() > 1) {
    const size_t pairs = cur.size() / 2;
    std::vector<Fp> left(pairs), right(pairs), diff(pairs);
    for (size_t q = 0; q < pairs; ++q) {
      left[q] = cur[2 * q];
      right[q] = cur[2 * q + 1];
      diff[q] = left[q] - right[q];
    }
    std::vector<Fp> b = ge(ctx, left, right, value_bits(ctx, precision));
    const std::vector<Fp> pick = mul(ctx, b, diff);
    std::vector<Fp> next(pairs + cur.size() % 2);
    for (size_t q = 0; q < pairs; ++q) next[q] = right[q] + pick[q];
    if (cur.size() % 2 == 1) next.back() = cur.back();
    level_sizes.push_back(cur.size());
    level_bits.push_back(std::move(b));
    cur = std::move(next);
  }

  // Expand the winner path. s holds [node is on the winning path] for the
  // nodes of the current level; the root is public 1.
  std::vector<Fp> s = {Fp(1)};
  for (size_t lvl = level_bits.size(); lvl-- > 0;) {
    const std::vector<Fp>& b = level_bits[lvl];
    const size_t size = level_sizes[lvl];
    const size_t pairs = size / 2;
    std::vector<Fp> left;
    if (lvl + 1 == level_bits.size()) {
      left = b;
    } else {
      left = mul(ctx, std::span<const Fp>(s.data(), pairs), b);
    }
    std::vector<Fp> child(size);
    for (size_t q = 0; q < pairs; ++q) {
      child[2 * q] = left[q];
      child[2 * q + 1] = s[q] - left[q];
    }
    if (size % 2 == 1) child.back() = s[pairs];
    s = std::move(child);
  }
  return {std::move(s), cur.front()};
}

ShareVector argmax(PartyContext& ctx, std::span<const Fp> x, Precision precision) {
  return argmax_with_max(ctx, x, precision).onehot;
}

std::vector<ShareVector> exact_topk(PartyContext& ctx, std::span<const Fp> x, size_t k,
                                   Precision precision) {
  if (k == 0 || k > x.size()) {
    throw ParameterError("top-k needs 1 <= k <= n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(x.size()) + ")");
  }
  const Fp sentinel = topk_sentinel(ctx.codec(), precision);
  std::vector<Fp> cur(x.begin(), x.end());
  std::vector<ShareVector> out;
  out.reserve(k);
  for (size_t j = 0; j < k; ++j) {
    ArgmaxResult r = argmax_with_max(ctx, cur, precision);
    if (j + 1 < k) {
      // x := x - onehot * (max - sentinel): the extracted entry becomes the
      // sentinel exactly, every other entry is unchanged.
      const std::vector<Fp> delta(cur.size(), r.max - sentinel);
      const std::vector<Fp> drop = mul(ctx, r.onehot, delta);
      for (size_t i = 0; i < cur.size(); ++i) cur[i] -= drop[i];
    }
    out.push_back(std::move(r.onehot));
  }
  return out;
}

std::vector<Fp> local_matmult(const MatrixView& a, const MatrixView& b) {
  if (a.cols != b.rows) {
    throw DimensionError("matmult inner dimensions differ: " + std::to_string(a.cols) + " vs " +
                         std::to_string(b.rows));
  }
  const size_t r = a.rows;
  const size_t c = b.cols;
  std::vector<Fp> out(r * c);
  std::vector<unsigned __int128> acc(c);
  for (size_t i = 0; i < r; ++i) {
    std::fill(acc.begin(), acc.end(), 0);
    const auto arow = a.row(i);
    for (size_t l = 0; l < a.cols; ++l) {
      const uint64_t av = arow[l].value();
      const Fp* brow = b.data + l * b.stride;
      for (size_t j = 0; j < c; ++j) {
        acc[j] += static_cast<unsigned __int128>(av) * brow[j].value();
      }
      // Each product is below 2^122; fold before 64 of them can overflow.
      if (l % 32 == 31) {
        for (size_t j = 0; j < c; ++j) acc[j] = Fp::reduce128(acc[j]);
      }
    }
    for (size_t j = 0; j < c; ++j) out[i * c + j] = Fp::raw(Fp::reduce128(acc[j]));
  }
  return out;
}

ShareMatrix matmult(PartyContext& ctx, const MatrixView& a, const MatrixView& b,
                    ProductKind kind) {
  if (kind == ProductKind::kFixed && a.cols > ctx.budget().max_sum_length) {
    throw ParameterError("inner dimension exceeds the field headroom");
  }
  const std::vector<Fp> local = local_matmult(a, b);
  ShareMatrix out;
  out.rows = a.rows;
  out.cols = b.cols;
  out.data = kind == ProductKind::kFixed ? reduce_truncate(ctx, local) : reduce_degree(ctx, local);
  return out;
}

ShareMatrix oblivious_select(PartyContext& ctx, const std::vector<ShareVector>& selections,
                             const MatrixView& m) {
  ShareMatrix sel(selections.size(), m.rows);
  for (size_t i = 0; i < selections.size(); ++i) {
    if (selections[i].size() != m.rows) {
      throw DimensionError("selection length " + std::to_string(selections[i].size()) +
                           " does not match " + std::to_string(m.rows) + " rows");
    }
    std::copy(selections[i].begin(), selections[i].end(), sel.row(i).begin());
  }
  return matmult(ctx, sel.view(), m, ProductKind::kInteger);
}

Fp onehot_position(std::span<const Fp> onehot) {
  WideAccumulator acc;
  for (size_t i = 1; i < onehot.size(); ++i) acc.add_product(Fp(i), onehot[i]);
  return acc.result();
}

}  // namespace vecmpc
