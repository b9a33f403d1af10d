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

#include "vecmpc/ivf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace vecmpc {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open " + path);
  const auto size = static_cast<size_t>(in.tellg());
  in.seekg(0);
  std::vector<uint8_t> buf(size);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!in) throw FormatError("short read from " + path);
  return buf;
}

void dump(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write to " + path + " failed");
}

void expect_magic(const std::vector<uint8_t>& buf, const char* magic, const std::string& path) {
  if (buf.size() < 4 || std::memcmp(buf.data(), magic, 4) != 0) {
    throw FormatError(path + ": missing " + std::string(magic, 4) + " header");
  }
}

void put_f32(std::vector<uint8_t>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(const uint8_t* p) {
  const uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void put_f64(std::vector<uint8_t>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

double get_f64(const uint8_t* p) {
  const uint64_t bits = get_u64(p);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

// Bounds-checked reader over a byte buffer.
class Cursor {
 public:
  Cursor(const std::vector<uint8_t>& buf, std::string path) : buf_(buf), path_(std::move(path)) {}
  const uint8_t* take(size_t n) {
    if (pos_ + n > buf_.size()) throw FormatError(path_ + ": truncated file");
    const uint8_t* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  uint16_t u16() { return get_u16(take(2)); }
  uint32_t u32() { return get_u32(take(4)); }
  uint64_t u64() { return get_u64(take(8)); }
  std::vector<Fp> elements(size_t count) {
    const uint8_t* p = take(count * kElementBytes);
    return unpack_elements(std::span<const uint8_t>(p, count * kElementBytes));
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::vector<uint8_t>& buf_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

EmbeddingMatrix read_embeddings(const std::string& path) {
  const auto buf = slurp(path);
  expect_magic(buf, "EMB1", path);
  Cursor cur(buf, path);
  cur.take(4);
  const uint32_t n = cur.u32();
  const uint32_t d = cur.u32();
  if (buf.size() != 12 + size_t{n} * d * 4) {
    throw FormatError(path + ": expected " + std::to_string(size_t{n} * d) + " floats");
  }
  EmbeddingMatrix m(n, d);
  for (size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = get_f32(buf.data() + 12 + 4 * i);
    if (!std::isfinite(m.data[i])) throw FormatError(path + ": non-finite value");
  }
  return m;
}

void write_embeddings(const std::string& path, const EmbeddingMatrix& m) {
  std::vector<uint8_t> out = {'E', 'M', 'B', '1'};
  out.reserve(12 + m.data.size() * 4);
  put_u32(out, m.rows);
  put_u32(out, m.cols);
  for (float v : m.data) put_f32(out, v);
  dump(path, out);
}

PayloadTable read_payloads(const std::string& path) {
  const auto buf = slurp(path);
  expect_magic(buf, "PAY1", path);
  PayloadTable p;
  p.rows = get_u32(buf.data() + 4);
  p.width = get_u32(buf.data() + 8);
  if (buf.size() != 12 + size_t{p.rows} * p.width) throw FormatError(path + ": size mismatch");
  p.bytes.assign(buf.begin() + 12, buf.end());
  return p;
}

void write_payloads(const std::string& path, const PayloadTable& p) {
  if (p.bytes.size() != size_t{p.rows} * p.width) throw FormatError("payload table size mismatch");
  std::vector<uint8_t> out = {'P', 'A', 'Y', '1'};
  put_u32(out, p.rows);
  put_u32(out, p.width);
  out.insert(out.end(), p.bytes.begin(), p.bytes.end());
  dump(path, out);
}

size_t payload_elements(size_t width) {
  return (width + kPayloadBytesPerElement - 1) / kPayloadBytesPerElement;
}

std::vector<Fp> pack_payload(std::span<const uint8_t> bytes) {
  std::vector<Fp> out(payload_elements(bytes.size()));
  for (size_t i = 0; i < bytes.size(); ++i) {
    const size_t e = i / kPayloadBytesPerElement;
    const size_t shift = 8 * (i % kPayloadBytesPerElement);
    out[e] = Fp(out[e].value() | (uint64_t{bytes[i]} << shift));
  }
  return out;
}

std::vector<uint8_t> unpack_payload(std::span<const Fp> elements, size_t width) {
  if (elements.size() < payload_elements(width)) throw FormatError("payload too short");
  std::vector<uint8_t> out(width);
  for (size_t i = 0; i < width; ++i) {
    out[i] = static_cast<uint8_t>(elements[i / kPayloadBytesPerElement].value() >>
                                  (8 * (i % kPayloadBytesPerElement)));
  }
  return out;
}

void normalize_in_place(std::span<float> v) {
  double s = 0;
  for (float x : v) s += double{x} * x;
  if (s == 0) return;
  const double inv = 1.0 / std::sqrt(s);
  for (float& x : v) x = static_cast<float>(x * inv);
}

EmbeddingMatrix normalized_rows(const EmbeddingMatrix& m) {
  EmbeddingMatrix out = m;
  for (size_t i = 0; i < out.rows; ++i) normalize_in_place(out.row(i));
  return out;
}

EmbeddingMatrix prepare_rows(const EmbeddingMatrix& m, Metric metric) {
  return metric == Metric::kCosine ? normalized_rows(m) : m;
}

uint32_t cluster_count(uint32_t n_rows, double alpha) {
  const double c = std::round(alpha * std::sqrt(static_cast<double>(n_rows)));
  return static_cast<uint32_t>(std::max(1.0, c));
}

namespace {

// Squared distances from rows [begin, end) to every centroid.
RowMatrix distances(const EmbeddingMatrix& data, size_t begin, size_t end,
                    const EmbeddingMatrix& centroids) {
  Eigen::Map<const RowMatrix> x(data.data.data() + begin * data.cols,
                                static_cast<Eigen::Index>(end - begin), data.cols);
  Eigen::Map<const RowMatrix> c(centroids.data.data(), centroids.rows, centroids.cols);
  RowMatrix dist = -2.0f * (x * c.transpose());
  dist.colwise() += x.rowwise().squaredNorm();
  dist.rowwise() += c.rowwise().squaredNorm().transpose();
  return dist;
}

constexpr size_t kChunkRows = 4096;

std::vector<uint32_t> assign_nearest(const EmbeddingMatrix& data, const EmbeddingMatrix& centroids) {
  std::vector<uint32_t> out(data.rows);
  for (size_t begin = 0; begin < data.rows; begin += kChunkRows) {
    const size_t end = std::min<size_t>(data.rows, begin + kChunkRows);
    const RowMatrix dist = distances(data, begin, end, centroids);
    for (size_t i = begin; i < end; ++i) {
      Eigen::Index best;
      dist.row(static_cast<Eigen::Index>(i - begin)).minCoeff(&best);
      out[i] = static_cast<uint32_t>(best);
    }
  }
  return out;
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (size_t j = 0; j < a.size(); ++j) {
    const double d = double{a[j]} - b[j];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<uint32_t> kmeans(const EmbeddingMatrix& data, uint32_t k, const IvfParams& params,
                             EmbeddingMatrix& centroids, int* iterations) {
  const uint32_t n = data.rows;
  const uint32_t d = data.cols;
  if (k == 0 || n < k) {
    throw BuildError("k-means needs 1 <= n_c <= N (n_c=" + std::to_string(k) +
                     ", N=" + std::to_string(n) + ")");
  }
  Prg prg(params.seed, 0x6b6d65616e73ULL);
  centroids = EmbeddingMatrix(k, d);

  // k-means++ seeding.
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  uint32_t pick = static_cast<uint32_t>(prg.next_below(n));
  for (uint32_t c = 0; c < k; ++c) {
    std::copy(data.row(pick).begin(), data.row(pick).end(), centroids.row(c).begin());
    double total = 0;
    for (uint32_t i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], squared_distance(data.row(i), centroids.row(c)));
      total += min_dist[i];
    }
    if (c + 1 == k) break;
    if (total <= 0) {
      pick = static_cast<uint32_t>(prg.next_below(n));
      continue;
    }
    const double target = prg.next_unit() * total;
    double acc = 0;
    pick = n - 1;
    for (uint32_t i = 0; i < n; ++i) {
      acc += min_dist[i];
      if (acc > target && min_dist[i] > 0) {
        pick = i;
        break;
      }
    }
  }

  std::vector<uint32_t> assign;
  int iter = 0;
  std::vector<double> sums(size_t{k} * d);
  std::vector<uint32_t> counts(k);
  for (; iter < params.max_iterations; ++iter) {
    assign = assign_nearest(data, centroids);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (uint32_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      double* s = sums.data() + size_t{assign[i]} * d;
      const auto r = data.row(i);
      for (uint32_t j = 0; j < d; ++j) s[j] += r[j];
    }
    double shift = 0;
    double norm = 0;
    for (uint32_t c = 0; c < k; ++c) {
      auto row = centroids.row(c);
      for (uint32_t j = 0; j < d; ++j) norm += double{row[j]} * row[j];
      if (counts[c] == 0) continue;
      for (uint32_t j = 0; j < d; ++j) {
        const float updated = static_cast<float>(sums[size_t{c} * d + j] / counts[c]);
        shift += (double{updated} - row[j]) * (double{updated} - row[j]);
        row[j] = updated;
      }
    }
    if (norm == 0 ? shift == 0 : std::sqrt(shift / norm) < params.tolerance) {
      ++iter;
      break;
    }
  }
  // Final assignment against the final centroids.
  assign = assign_nearest(data, centroids);
  if (iterations) *iterations = iter;
  return assign;
}

std::vector<uint32_t> cluster_overflow_policy(const EmbeddingMatrix& data,
                                              const EmbeddingMatrix& centroids,
                                              std::vector<uint32_t> assignments,
                                              uint32_t capacity) {
  const uint32_t k = centroids.rows;
  if (size_t{k} * capacity < data.rows) {
    throw BuildError("cluster capacity " + std::to_string(size_t{k} * capacity) +
                     " is below N=" + std::to_string(data.rows) + "; raise the cluster size");
  }
  std::vector<std::vector<uint32_t>> members(k);
  for (uint32_t i = 0; i < assignments.size(); ++i) members[assignments[i]].push_back(i);
  std::vector<uint32_t> sizes(k);
  for (uint32_t c = 0; c < k; ++c) sizes[c] = static_cast<uint32_t>(members[c].size());

  for (uint32_t c = 0; c < k; ++c) {
    if (sizes[c] <= capacity) continue;
    std::vector<std::pair<double, uint32_t>> by_dist;
    for (uint32_t i : members[c]) by_dist.emplace_back(squared_distance(data.row(i), centroids.row(c)), i);
    std::sort(by_dist.begin(), by_dist.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const uint32_t excess = sizes[c] - capacity;
    for (uint32_t e = 0; e < excess; ++e) {
      const uint32_t i = by_dist[e].second;
      std::vector<std::pair<double, uint32_t>> order;
      for (uint32_t o = 0; o < k; ++o) {
        if (o != c) order.emplace_back(squared_distance(data.row(i), centroids.row(o)), o);
      }
      std::sort(order.begin(), order.end());
      for (const auto& [dist, o] : order) {
        if (sizes[o] < capacity) {
          assignments[i] = o;
          ++sizes[o];
          --sizes[c];
          break;
        }
      }
    }
  }
  return assignments;
}

PlainIvfIndex kmeans_build(const EmbeddingMatrix& rows, Metric metric, const IvfParams& params) {
  if (rows.rows == 0 || rows.cols == 0) throw BuildError("empty database");
  PlainIvfIndex idx;
  idx.n_rows = rows.rows;
  idx.dim = rows.cols;
  idx.alpha = params.alpha;
  idx.metric = metric;
  idx.n_clusters = params.n_clusters ? *params.n_clusters : cluster_count(rows.rows, params.alpha);
  if (idx.n_clusters == 0 || idx.n_clusters > rows.rows) {
    throw BuildError("need 1 <= n_c <= N");
  }
  idx.cluster_size = params.cluster_size
                         ? *params.cluster_size
                         : static_cast<uint32_t>(std::ceil(params.slack * rows.rows / idx.n_clusters));
  auto assign = kmeans(rows, idx.n_clusters, params, idx.centroids, &idx.iterations_run);
  assign = cluster_overflow_policy(rows, idx.centroids, std::move(assign), idx.cluster_size);
  idx.members.assign(idx.n_clusters, {});
  for (uint32_t i = 0; i < rows.rows; ++i) idx.members[assign[i]].push_back(i);
  return idx;
}

void write_plain_index(const std::string& path, const PlainIvfIndex& index) {
  std::vector<uint8_t> out = {'I', 'V', 'F', 'P'};
  put_u32(out, 1);
  put_u32(out, index.n_rows);
  put_u32(out, index.dim);
  put_u32(out, index.n_clusters);
  put_u32(out, index.cluster_size);
  put_u16(out, static_cast<uint16_t>(index.metric));
  put_u16(out, 0);
  put_f64(out, index.alpha);
  for (float v : index.centroids.data) put_f32(out, v);
  for (const auto& m : index.members) {
    put_u32(out, static_cast<uint32_t>(m.size()));
    for (uint32_t id : m) put_u32(out, id);
  }
  dump(path, out);
}

PlainIvfIndex read_plain_index(const std::string& path) {
  const auto buf = slurp(path);
  expect_magic(buf, "IVFP", path);
  Cursor cur(buf, path);
  cur.take(4);
  if (cur.u32() != 1) throw FormatError(path + ": unsupported index version");
  PlainIvfIndex idx;
  idx.n_rows = cur.u32();
  idx.dim = cur.u32();
  idx.n_clusters = cur.u32();
  idx.cluster_size = cur.u32();
  const uint16_t metric = cur.u16();
  if (metric > 2) throw FormatError(path + ": unknown metric");
  idx.metric = static_cast<Metric>(metric);
  cur.u16();
  idx.alpha = get_f64(cur.take(8));
  idx.centroids = EmbeddingMatrix(idx.n_clusters, idx.dim);
  for (float& v : idx.centroids.data) v = get_f32(cur.take(4));
  idx.members.resize(idx.n_clusters);
  size_t total = 0;
  for (auto& m : idx.members) {
    const uint32_t count = cur.u32();
    if (count > idx.cluster_size) throw FormatError(path + ": cluster larger than m");
    m.resize(count);
    for (uint32_t& id : m) {
      id = cur.u32();
      if (id >= idx.n_rows) throw FormatError(path + ": member id out of range");
    }
    total += count;
  }
  if (total != idx.n_rows || !cur.done()) throw FormatError(path + ": inconsistent index");
  return idx;
}

double padding_penalty_value(const FixedPointCodec& codec) { return -codec.max_magnitude / 2; }

Fp padding_penalty(const FixedPointCodec& codec) {
  return codec.encode(padding_penalty_value(codec));
}

EncodedIndex encode_index(const PlainIvfIndex* index, const EmbeddingMatrix& rows,
                          const PayloadTable* payloads, Metric metric,
                          const FixedPointCodec& codec, ShareOptions what) {
  const size_t n = rows.rows;
  const size_t d = rows.cols;
  const size_t width = payloads ? payloads->width : 0;
  const size_t pw = payload_elements(width);
  if (payloads && payloads->rows != n) throw DimensionError("payload rows do not match N");
  EncodedIndex enc;
  std::vector<std::vector<Fp>> packed(n);
  for (size_t i = 0; i < n && pw > 0; ++i) packed[i] = pack_payload(payloads->row(i));

  if (what.flat) {
    enc.flat = codec.encode_all(std::span<const float>(rows.data));
    enc.payload.reserve(n * pw);
    for (size_t i = 0; i < n && pw > 0; ++i) {
      enc.payload.insert(enc.payload.end(), packed[i].begin(), packed[i].end());
    }
  }
  if (what.ivf) {
    if (!index) throw BuildError("no IVF index to share");
    if (index->n_rows != n || index->dim != d) throw DimensionError("index does not match rows");
    EmbeddingMatrix cents =
        metric == Metric::kCosine ? normalized_rows(index->centroids) : index->centroids;
    enc.centroids = codec.encode_all(std::span<const float>(cents.data));
    const size_t m = index->cluster_size;
    const size_t rw = d + 2 + pw;
    enc.clusters.assign(size_t{index->n_clusters} * m * rw, Fp());
    const Fp penalty = padding_penalty(codec);
    for (size_t c = 0; c < index->n_clusters; ++c) {
      const auto& mem = index->members[c];
      if (mem.size() > m) throw BuildError("cluster exceeds its size");
      for (size_t s = 0; s < m; ++s) {
        Fp* rec = enc.clusters.data() + (c * m + s) * rw;
        if (s < mem.size()) {
          const auto r = rows.row(mem[s]);
          for (size_t j = 0; j < d; ++j) rec[j] = codec.encode(r[j]);
          rec[d + 1] = Fp(mem[s]);
          for (size_t j = 0; j < pw; ++j) rec[d + 2 + j] = packed[mem[s]][j];
        } else {
          rec[d] = penalty;
          rec[d + 1] = Fp(n);
        }
      }
    }
  }
  return enc;
}

namespace {

ShareMatrix take_share(std::vector<std::vector<Fp>>& per_party, int party, size_t rows,
                       size_t cols) {
  ShareMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.data = std::move(per_party[party]);
  return m;
}

}  // namespace

std::vector<SharedIndex> share_index(const PlainIvfIndex* index, const EmbeddingMatrix& rows,
                                     const PayloadTable* payloads, Metric metric,
                                     const ShareScheme& scheme, const FixedPointCodec& codec,
                                     Prg& prg, ShareOptions what) {
  EncodedIndex enc = encode_index(index, rows, payloads, metric, codec, what);
  const int n = scheme.n();
  std::vector<SharedIndex> out(n);
  for (int p = 0; p < n; ++p) {
    SharedIndex& s = out[p];
    s.party = static_cast<PartyId>(p);
    s.n_servers = n;
    s.threshold = scheme.t();
    s.frac_bits = codec.frac_bits;
    s.metric = metric;
    s.n_rows = rows.rows;
    s.dim = rows.cols;
    s.payload_width = payloads ? payloads->width : 0;
    s.has_flat = what.flat;
    s.has_ivf = what.ivf;
    if (what.ivf) {
      s.n_clusters = index->n_clusters;
      s.cluster_size = index->cluster_size;
    }
  }
  const size_t pw = payload_elements(out[0].payload_width);
  auto share_section = [&](std::vector<Fp>& plain, size_t r, size_t c, ShareMatrix SharedIndex::*field) {
    auto per_party = share_batch(plain, scheme.t(), scheme, prg);
    plain.clear();
    plain.shrink_to_fit();
    for (int p = 0; p < n; ++p) out[p].*field = take_share(per_party, p, r, c);
  };
  if (what.flat) {
    share_section(enc.flat, rows.rows, rows.cols, &SharedIndex::flat);
    share_section(enc.payload, rows.rows, pw, &SharedIndex::payload);
  }
  if (what.ivf) {
    const size_t rw = rows.cols + 2 + pw;
    share_section(enc.centroids, index->n_clusters, rows.cols, &SharedIndex::centroids);
    share_section(enc.clusters, index->n_clusters, size_t{index->cluster_size} * rw,
                  &SharedIndex::clusters);
  }
  return out;
}

namespace {
constexpr uint32_t kShardVersion = 1;
}

void write_shard(const std::string& path, const SharedIndex& s) {
  std::vector<uint8_t> out = {'I', 'V', 'F', 'S'};
  put_u32(out, kShardVersion);
  put_u16(out, s.party);
  put_u16(out, static_cast<uint16_t>(s.n_servers));
  put_u16(out, static_cast<uint16_t>(s.threshold));
  put_u16(out, static_cast<uint16_t>(s.frac_bits));
  put_u16(out, static_cast<uint16_t>(s.metric));
  put_u16(out, static_cast<uint16_t>((s.has_flat ? 1 : 0) | (s.has_ivf ? 2 : 0)));
  put_u32(out, s.n_rows);
  put_u32(out, s.dim);
  put_u32(out, s.payload_width);
  put_u32(out, s.n_clusters);
  put_u32(out, s.cluster_size);
  if (s.has_flat) {
    append_elements(out, s.flat.data);
    append_elements(out, s.payload.data);
  }
  if (s.has_ivf) {
    append_elements(out, s.centroids.data);
    append_elements(out, s.clusters.data);
  }
  dump(path, out);
}

SharedIndex read_shard(const std::string& path) {
  const auto buf = slurp(path);
  expect_magic(buf, "IVFS", path);
  Cursor cur(buf, path);
  cur.take(4);
  if (cur.u32() != kShardVersion) throw FormatError(path + ": unsupported shard version");
  SharedIndex s;
  s.party = cur.u16();
  s.n_servers = cur.u16();
  s.threshold = cur.u16();
  s.frac_bits = cur.u16();
  const uint16_t metric = cur.u16();
  if (metric > 2) throw FormatError(path + ": unknown metric");
  s.metric = static_cast<Metric>(metric);
  const uint16_t flags = cur.u16();
  s.has_flat = flags & 1;
  s.has_ivf = flags & 2;
  s.n_rows = cur.u32();
  s.dim = cur.u32();
  s.payload_width = cur.u32();
  s.n_clusters = cur.u32();
  s.cluster_size = cur.u32();
  const size_t pw = s.payload_elems();
  auto read_matrix = [&](size_t r, size_t c) {
    ShareMatrix m;
    m.rows = r;
    m.cols = c;
    m.data = cur.elements(r * c);
    return m;
  };
  if (s.has_flat) {
    s.flat = read_matrix(s.n_rows, s.dim);
    s.payload = read_matrix(s.n_rows, pw);
  }
  if (s.has_ivf) {
    s.centroids = read_matrix(s.n_clusters, s.dim);
    s.clusters = read_matrix(s.n_clusters, size_t{s.cluster_size} * s.record_width());
  }
  if (!cur.done()) throw FormatError(path + ": trailing bytes");
  return s;
}

}  // namespace vecmpc
