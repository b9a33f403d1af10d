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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vecmpc/protocols.hpp"
#include "vecmpc/random.hpp"
#include "vecmpc/shamir.hpp"

namespace vecmpc {

// Row-major float matrix, the in-memory form of an EMB1 file.
struct EmbeddingMatrix {
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<float> data;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(uint32_t r, uint32_t c) : rows(r), cols(c), data(size_t{r} * c) {}
  std::span<const float> row(size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<float> row(size_t i) { return {data.data() + i * cols, cols}; }
};

// EMB1: magic "EMB1", u32 N, u32 d, N*d little-endian f32, row-major.
EmbeddingMatrix read_embeddings(const std::string& path);
void write_embeddings(const std::string& path, const EmbeddingMatrix& m);

// PAY1: magic "PAY1", u32 N, u32 width, N*width bytes.
struct PayloadTable {
  uint32_t rows = 0;
  uint32_t width = 0;
  std::vector<uint8_t> bytes;

  std::span<const uint8_t> row(size_t i) const { return {bytes.data() + i * width, width}; }
};
PayloadTable read_payloads(const std::string& path);
void write_payloads(const std::string& path, const PayloadTable& p);

// Payload bytes are packed 7 per field element (little-endian), so every
// element stays below p.
inline constexpr size_t kPayloadBytesPerElement = 7;
size_t payload_elements(size_t width);
std::vector<Fp> pack_payload(std::span<const uint8_t> bytes);
std::vector<uint8_t> unpack_payload(std::span<const Fp> elements, size_t width);

void normalize_in_place(std::span<float> v);
EmbeddingMatrix normalized_rows(const EmbeddingMatrix& m);
// Rows as the engine sees them: L2-normalized for cosine, unchanged otherwise.
EmbeddingMatrix prepare_rows(const EmbeddingMatrix& m, Metric metric);

struct IvfParams {
  double alpha = 1.0;
  // Overrides round(alpha * sqrt(N)) when set.
  std::optional<uint32_t> n_clusters;
  double slack = 1.3;
  // Overrides ceil(slack * N / n_c) when set.
  std::optional<uint32_t> cluster_size;
  int max_iterations = 25;
  double tolerance = 1e-4;
  uint64_t seed = 1;
};

uint32_t cluster_count(uint32_t n_rows, double alpha);

struct PlainIvfIndex {
  uint32_t n_rows = 0;  // N; also the db index of padding slots
  uint32_t dim = 0;
  uint32_t n_clusters = 0;
  uint32_t cluster_size = 0;  // m
  double alpha = 1.0;
  Metric metric = Metric::kDot;
  // n_c x d, in the space the index was built in (normalized for cosine).
  EmbeddingMatrix centroids;
  // Real members of each cluster in slot order; slots past the end are
  // padding.
  std::vector<std::vector<uint32_t>> members;
  int iterations_run = 0;
};

// Lloyd's k-means with k-means++ seeding; empty clusters keep their previous
// centroid. Returns assignments and writes the centroids.
std::vector<uint32_t> kmeans(const EmbeddingMatrix& data, uint32_t k, const IvfParams& params,
                             EmbeddingMatrix& centroids, int* iterations = nullptr);

// Clusters above `capacity` spill their farthest members, one at a time,
// to the nearest cluster that still has room. Throws BuildError when
// n_c * capacity < N.
std::vector<uint32_t> cluster_overflow_policy(const EmbeddingMatrix& data,
                                              const EmbeddingMatrix& centroids,
                                              std::vector<uint32_t> assignments,
                                              uint32_t capacity);

// `rows` must already be prepared for the metric (see prepare_rows).
PlainIvfIndex kmeans_build(const EmbeddingMatrix& rows, Metric metric, const IvfParams& params);

// IVFP: magic "IVFP", u32 version, u32 N, d, n_c, m, u16 metric, u16 0,
// f64 alpha, n_c*d f32 centroids, then per cluster u32 count + count u32 ids.
void write_plain_index(const std::string& path, const PlainIvfIndex& index);
PlainIvfIndex read_plain_index(const std::string& path);

// Added to the score of every padding slot; real scores must stay above it.
Fp padding_penalty(const FixedPointCodec& codec);
double padding_penalty_value(const FixedPointCodec& codec);

// One server's shares of the database and (optionally) of the IVF index.
//
// Cluster tensor rows hold m records of
//   [vector (d) | penalty (1) | db index (1) | payload (pw)]
// with penalty 0 for real rows and padding_penalty for padding, db index N
// for padding.
struct SharedIndex {
  PartyId party = 0;
  int n_servers = 0;
  int threshold = 0;
  int frac_bits = 16;
  Metric metric = Metric::kDot;
  uint32_t n_rows = 0;
  uint32_t dim = 0;
  uint32_t payload_width = 0;  // bytes
  uint32_t n_clusters = 0;
  uint32_t cluster_size = 0;
  bool has_flat = false;
  bool has_ivf = false;

  ShareMatrix flat;       // N x d
  ShareMatrix payload;    // N x pw
  ShareMatrix centroids;  // n_c x d
  ShareMatrix clusters;   // n_c x (m * record_width)

  size_t payload_elems() const { return payload_elements(payload_width); }
  size_t record_width() const { return dim + 2 + payload_elems(); }
  size_t penalty_column() const { return dim; }
  size_t index_column() const { return dim + 1; }
};

struct ShareOptions {
  bool flat = true;
  bool ivf = true;
};

// Shares everything at degree t. `rows` must be prepared for the metric
// (normalized for cosine); centroids are normalized here for cosine.
std::vector<SharedIndex> share_index(const PlainIvfIndex* index, const EmbeddingMatrix& rows,
                                     const PayloadTable* payloads, Metric metric,
                                     const ShareScheme& scheme, const FixedPointCodec& codec,
                                     Prg& prg, ShareOptions what = {});

// Plaintext layout that share_index secret-shares, for tests and oracles:
// the flat database, centroids and cluster tensor as field elements.
struct EncodedIndex {
  std::vector<Fp> flat;
  std::vector<Fp> payload;
  std::vector<Fp> centroids;
  std::vector<Fp> clusters;
};
EncodedIndex encode_index(const PlainIvfIndex* index, const EmbeddingMatrix& rows,
                          const PayloadTable* payloads, Metric metric,
                          const FixedPointCodec& codec, ShareOptions what = {});

// IVFS shard file: magic "IVFS", u32 version, then the public parameters of
// SharedIndex, then the packed share matrices present.
void write_shard(const std::string& path, const SharedIndex& shard);
SharedIndex read_shard(const std::string& path);

}  // namespace vecmpc
