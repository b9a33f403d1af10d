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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vecmpc/ivf.hpp"

namespace vecmpc {

// Plaintext reference searches in double precision. Scores follow the
// engine's orientation (higher is closer); ties go to the lower position.

double plain_score(Metric metric, std::span<const float> q, std::span<const float> row);

// Indices of the k best rows of `rows`.
std::vector<uint32_t> plain_exact_topk(Metric metric, std::span<const float> q,
                                       const EmbeddingMatrix& rows, size_t k);

struct PlainIvfTrace {
  std::vector<uint32_t> probed;      // clusters in rank order
  std::vector<uint32_t> candidates;  // db ids in candidate order, N for padding
  std::vector<uint32_t> result;      // top-k db ids, padding dropped
};

// Mirrors the oblivious pipeline step by step: centroid scores, top n_probe
// clusters, padded candidate list with the padding penalty, top k.
PlainIvfTrace plain_ivf_search(const PlainIvfIndex& index, const EmbeddingMatrix& rows,
                               std::span<const float> q, size_t k, size_t n_probe,
                               const FixedPointCodec& codec = {});

// Rows rounded to the fixed-point grid (decode(encode(x))).
EmbeddingMatrix quantized(const EmbeddingMatrix& m, const FixedPointCodec& codec);

}  // namespace vecmpc
