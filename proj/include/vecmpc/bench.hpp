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
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vecmpc/engine.hpp"
#include "vecmpc/ivf.hpp"

namespace vecmpc {

enum class Distribution { kGauss, kUniform, kBinary, kBlobs };

// gauss(mu, sigma) | uniform(a, b) | binary | blobs(count, spread).
struct SyntheticSpec {
  Distribution distribution = Distribution::kGauss;
  uint32_t n = 1000;
  uint32_t d = 64;
  uint64_t seed = 1;
  double a = 0.0;   // mu, low bound, or blob count
  double b = 0.05;  // sigma, high bound, or blob spread
  bool normalize = false;
};

// Parses "gauss(0,0.05)", "uniform(-1,1)", "binary", "blobs(16,0.05)" into
// distribution and parameters of `spec`.
void parse_distribution(const std::string& text, SyntheticSpec& spec);
std::string distribution_string(const SyntheticSpec& spec);

// Deterministic under (spec.seed, stream). Blob centers depend on spec.seed
// only, so different streams draw fresh points around the same centers.
// `labels` receives the blob of each row (zeros for other distributions).
EmbeddingMatrix gen_synthetic(const SyntheticSpec& spec, uint64_t stream = 0,
                              std::vector<uint32_t>* labels = nullptr);

struct RetrievalMetrics {
  double recall = 0;
  double precision = 0;
  double f1 = 0;
};

// Set overlap against the ground-truth top k. A result shorter than k (when
// padding slots were dropped) counts the missing slots as misses; a longer
// one is an error.
RetrievalMetrics eval_retrieval(const std::vector<uint32_t>& result,
                                const std::vector<uint32_t>& truth);

struct BenchRecord {
  std::string mode;
  std::string metric;
  uint32_t n = 0;
  uint32_t d = 0;
  uint32_t k = 0;
  uint32_t n_c = 0;
  uint32_t n_probe = 0;
  double recall = 0;
  double precision = 0;
  double f1 = 0;
  double wall_ms = 0;
  double bytes_per_server = 0;
  double client_bytes = 0;
  double rounds = 0;
  // Appended after the core columns.
  uint32_t n_servers = 0;
  double noise_sigma = 0;
  double plain_ms = 0;
};

std::string csv_header();
std::string csv_row(const BenchRecord& r);

struct SweepConfig {
  SyntheticSpec data;  // n is replaced by each entry of `sizes`
  // Externally supplied rows; when set, `sizes` takes prefixes of it.
  std::optional<EmbeddingMatrix> rows;
  std::vector<uint32_t> sizes = {1000};
  std::vector<QueryMode> modes = {QueryMode::kExact, QueryMode::kIvf};
  Metric metric = Metric::kDot;
  std::vector<uint32_t> ks = {10};
  std::vector<uint32_t> n_probes = {1, 2, 4, 8, 16};
  std::vector<double> alphas = {1.0};
  std::vector<int> n_servers = {3};
  std::vector<double> noise_sigmas = {0.0};
  uint32_t queries = 10;
  uint64_t seed = 1;
  // Query noise when queries are drawn from `rows` (relative to row norm).
  double query_jitter = 0.1;
};

// Runs every combination; `on_record` sees each row as it completes.
std::vector<BenchRecord> run_sweep(const SweepConfig& config,
                                   const std::function<void(const BenchRecord&)>& on_record = {});

struct PlotSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

// Minimal SVG line chart.
void write_svg_chart(const std::string& path, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<PlotSeries>& series,
                     bool log_x = false);

// Recall vs n_probe per (mode, N) and wall time vs N per mode.
void write_sweep_plots(const std::string& prefix, const std::vector<BenchRecord>& records);

}  // namespace vecmpc
