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

#include "vecmpc/oracle.hpp"

#include <algorithm>
#include <numeric>

namespace vecmpc {

double plain_score(Metric metric, std::span<const float> q, std::span<const float> row) {
  double s = 0;
  if (metric == Metric::kSqEuclidean) {
    for (size_t j = 0; j < q.size(); ++j) {
      const double d = double{q[j]} - row[j];
      s += d * d;
    }
    return -s;
  }
  for (size_t j = 0; j < q.size(); ++j) s += double{q[j]} * row[j];
  return s;
}

namespace {

std::vector<uint32_t> top_positions(const std::vector<double>& scores, size_t k) {
  std::vector<uint32_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0u);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<ptrdiff_t>(k), idx.end(),
                    [&](uint32_t a, uint32_t b) {
                      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                    });
  idx.resize(k);
  return idx;
}

}  // namespace

std::vector<uint32_t> plain_exact_topk(Metric metric, std::span<const float> q,
                                       const EmbeddingMatrix& rows, size_t k) {
  if (q.size() != rows.cols) throw DimensionError("query dimension mismatch");
  std::vector<double> scores(rows.rows);
  for (size_t i = 0; i < rows.rows; ++i) scores[i] = plain_score(metric, q, rows.row(i));
  return top_positions(scores, k);
}

PlainIvfTrace plain_ivf_search(const PlainIvfIndex& index, const EmbeddingMatrix& rows,
                               std::span<const float> q, size_t k, size_t n_probe,
                               const FixedPointCodec& codec) {
  if (q.size() != rows.cols) throw DimensionError("query dimension mismatch");
  if (n_probe == 0 || n_probe > index.n_clusters) throw ParameterError("need 1 <= n_probe <= n_c");
  const EmbeddingMatrix cents =
      index.metric == Metric::kCosine ? normalized_rows(index.centroids) : index.centroids;
  std::vector<double> cscores(cents.rows);
  for (size_t c = 0; c < cents.rows; ++c) cscores[c] = plain_score(index.metric, q, cents.row(c));
  PlainIvfTrace trace;
  trace.probed = top_positions(cscores, n_probe);

  const std::vector<float> zero(rows.cols, 0.0f);
  const double penalty = padding_penalty_value(codec);
  std::vector<double> scores;
  for (uint32_t c : trace.probed) {
    const auto& mem = index.members[c];
    for (size_t s = 0; s < index.cluster_size; ++s) {
      if (s < mem.size()) {
        trace.candidates.push_back(mem[s]);
        scores.push_back(plain_score(index.metric, q, rows.row(mem[s])));
      } else {
        trace.candidates.push_back(index.n_rows);
        scores.push_back(plain_score(index.metric, q, zero) + penalty);
      }
    }
  }
  for (uint32_t pos : top_positions(scores, k)) {
    if (trace.candidates[pos] != index.n_rows) trace.result.push_back(trace.candidates[pos]);
  }
  return trace;
}

EmbeddingMatrix quantized(const EmbeddingMatrix& m, const FixedPointCodec& codec) {
  EmbeddingMatrix out = m;
  for (float& v : out.data) v = static_cast<float>(codec.decode(codec.encode(v)));
  return out;
}

}  // namespace vecmpc
