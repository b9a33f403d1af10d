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

#include <span>
#include <string>
#include <vector>

#include "vecmpc/mpc.hpp"

namespace vecmpc {

enum class Metric : uint16_t { kDot = 0, kCosine = 1, kSqEuclidean = 2 };

const char* metric_name(Metric m);
// Accepts "dot", "cosine", "sq_euclidean" (also "l2"). Throws ParameterError.
Metric parse_metric(const std::string& name);

// Degree-t shares held by one party. Entries of a vector or matrix always
// share the same degree; degree-2t values only exist inside the kernels.
using ShareVector = std::vector<Fp>;

// Rows of `cols` entries, `stride` apart. Lets kernels read the vector part
// of wider records (cluster tensors) without copying.
struct MatrixView {
  const Fp* data = nullptr;
  size_t rows = 0;
  size_t cols = 0;
  size_t stride = 0;

  std::span<const Fp> row(size_t i) const { return {data + i * stride, cols}; }
  // Columns [offset, offset + width) of every row.
  MatrixView columns(size_t offset, size_t width) const;
};

struct ShareMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<Fp> data;

  ShareMatrix() = default;
  ShareMatrix(size_t r, size_t c) : rows(r), cols(c), data(r * c) {}

  std::span<Fp> row(size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const Fp> row(size_t i) const { return {data.data() + i * cols, cols}; }
  Fp& at(size_t i, size_t j) { return data[i * cols + j]; }
  Fp at(size_t i, size_t j) const { return data[i * cols + j]; }
  MatrixView view() const { return {data.data(), rows, cols, cols}; }
};

// Entry i = q . DB_i. One round, one opened element per row.
ShareVector dot_scores(PartyContext& ctx, std::span<const Fp> q, const MatrixView& db);
// q and the rows of db must be L2-normalized before sharing.
ShareVector cosine_scores(PartyContext& ctx, std::span<const Fp> q, const MatrixView& db);
// Entry i = sum_j (q_j - DB_ij)^2; the square root is skipped (monotone).
ShareVector sq_euclidean_distances(PartyContext& ctx, std::span<const Fp> q,
                                   const MatrixView& db);
// "Higher is closer" scores for any metric (squared distances negated).
ShareVector similarity_scores(PartyContext& ctx, Metric metric, std::span<const Fp> q,
                              const MatrixView& db);

// Same scores left at precision 2f: degree reduction only, no truncation.
// Deterministic in the inputs, so two runs over the same shares rank equal
// candidates the same way even when their scores are under one ulp apart.
ShareVector ranking_scores(PartyContext& ctx, Metric metric, std::span<const Fp> q,
                           const MatrixView& db);

// Fractional bits carried by values fed to argmax / top-k.
enum class Precision { kSingle, kDouble };

// Value every extracted entry is pushed down to: -max_magnitude at the
// given precision.
Fp topk_sentinel(const FixedPointCodec& codec, Precision precision = Precision::kSingle);
// Public scale 2^f lifting a precision-f value to precision 2f.
Fp precision_lift(const FixedPointCodec& codec);

struct ArgmaxResult {
  ShareVector onehot;
  Fp max;
};

// Tournament over pairs (2q, 2q+1); the left entry wins ties, so the lowest
// index among equal maxima is selected. An odd entry out passes to the next
// level unchanged. The one-hot vector is expanded top-down from the winner
// bits afterwards.
ArgmaxResult argmax_with_max(PartyContext& ctx, std::span<const Fp> x,
                             Precision precision = Precision::kSingle);
ShareVector argmax(PartyContext& ctx, std::span<const Fp> x,
                   Precision precision = Precision::kSingle);

// k one-hot vectors of the largest entries, in descending order. All entries
// must decode to values strictly above the sentinel.
std::vector<ShareVector> exact_topk(PartyContext& ctx, std::span<const Fp> x, size_t k,
                                   Precision precision = Precision::kSingle);

enum class ProductKind {
  kInteger,  // at least one operand holds integers (one-hot, bits)
  kFixed,    // both fixed-point; truncated back to precision f
};

// A (r x inner) times B (inner x c). One round; r*c opened elements.
ShareMatrix matmult(PartyContext& ctx, const MatrixView& a, const MatrixView& b,
                    ProductKind kind);

// Stacks the selection vectors into a matrix and returns the selected rows of
// m (one per selection). Selections with several ones return row sums.
ShareMatrix oblivious_select(PartyContext& ctx, const std::vector<ShareVector>& selections,
                             const MatrixView& m);

// Local: sum_i i * onehot_i, the shared position of a one-hot vector.
Fp onehot_position(std::span<const Fp> onehot);

// Plaintext local product A (r x inner) * B (inner x c) over F_p.
std::vector<Fp> local_matmult(const MatrixView& a, const MatrixView& b);

}  // namespace vecmpc
