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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vecmpc/bench.hpp"

namespace vecmpc {
namespace {

TEST(Synthetic, ParseDistributions) {
  SyntheticSpec s;
  parse_distribution("uniform(-1,1)", s);
  EXPECT_EQ(s.distribution, Distribution::kUniform);
  EXPECT_EQ(s.a, -1.0);
  EXPECT_EQ(s.b, 1.0);
  parse_distribution("gauss(0, 0.05)", s);
  EXPECT_EQ(s.distribution, Distribution::kGauss);
  EXPECT_EQ(s.b, 0.05);
  parse_distribution("blobs(16,0.1)", s);
  EXPECT_EQ(s.distribution, Distribution::kBlobs);
  parse_distribution("binary", s);
  EXPECT_EQ(s.distribution, Distribution::kBinary);
  EXPECT_THROW(parse_distribution("uniform(1,1)", s), ParameterError);
  EXPECT_THROW(parse_distribution("blobs(2.5,1)", s), ParameterError);
  EXPECT_THROW(parse_distribution("cauchy(0,1)", s), ParameterError);
}

TEST(Synthetic, DeterministicFile) {
  SyntheticSpec s;
  s.n = 4;
  s.d = 2;
  s.seed = 9;
  const auto dir = std::filesystem::temp_directory_path();
  const std::string a = (dir / "vecmpc_det_a.emb").string();
  const std::string b = (dir / "vecmpc_det_b.emb").string();
  write_embeddings(a, gen_synthetic(s));
  write_embeddings(b, gen_synthetic(s));
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  EXPECT_EQ(slurp(a).size(), 12u + 4 * 2 * 4);
  EXPECT_EQ(slurp(a), slurp(b));
  s.seed = 10;
  EXPECT_NE(gen_synthetic(s).data, gen_synthetic(SyntheticSpec{s.distribution, 4, 2, 9}).data);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Synthetic, UniformMeanWithinThreeSigma) {
  SyntheticSpec s;
  parse_distribution("uniform(-1,1)", s);
  s.n = 1000;
  s.d = 50;
  const auto m = gen_synthetic(s);
  double sum = 0;
  for (float v : m.data) sum += v;
  const double mean = sum / m.data.size();
  const double sd = std::sqrt(1.0 / 3.0 / m.data.size());  // Var U(-1,1) = 1/3
  EXPECT_LT(std::abs(mean), 3 * sd);
  for (float v : m.data) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LT(v, 1.0f);
  }
}

TEST(Synthetic, BinaryEntries) {
  SyntheticSpec s;
  parse_distribution("binary", s);
  s.n = 100;
  s.d = 16;
  for (float v : gen_synthetic(s).data) EXPECT_TRUE(v == 1.0f || v == -1.0f);
  s.normalize = true;
  const auto m = gen_synthetic(s);
  for (float v : m.data) EXPECT_NEAR(std::abs(v), 0.25f, 1e-6);
}

TEST(Synthetic, BlobStreamsShareCenters) {
  SyntheticSpec s;
  parse_distribution("blobs(3,0.0)", s);
  s.n = 30;
  s.d = 4;
  std::vector<uint32_t> la, lb;
  const auto a = gen_synthetic(s, 0, &la);
  const auto b = gen_synthetic(s, 1, &lb);
  // Zero spread: rows are the centers themselves.
  for (uint32_t i = 0; i < 30; ++i) {
    for (uint32_t j = 0; j < 30; ++j) {
      if (la[i] == lb[j]) {
        EXPECT_EQ(std::vector<float>(a.row(i).begin(), a.row(i).end()),
                  std::vector<float>(b.row(j).begin(), b.row(j).end()));
      }
    }
  }
}

TEST(EvalRetrieval, Examples) {
  auto m = eval_retrieval({1, 2, 3}, {3, 2, 1});
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  m = eval_retrieval({4, 5}, {1, 2});
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  std::vector<uint32_t> truth(50), result(50);
  for (uint32_t i = 0; i < 50; ++i) {
    truth[i] = i;
    result[i] = i < 45 ? i : 100 + i;
  }
  m = eval_retrieval(result, truth);
  EXPECT_DOUBLE_EQ(m.recall, 0.9);
  EXPECT_DOUBLE_EQ(m.precision, 0.9);
  // Short results count missing slots as misses.
  m = eval_retrieval({1}, {1, 2});
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_THROW(eval_retrieval({1, 2, 3}, {1, 2}), ParameterError);
}

TEST(Sweep, CsvColumnsInRecordOrder) {
  EXPECT_EQ(csv_header().rfind("mode,metric,N,d,k,n_c,n_probe,recall,precision,f1,wall_ms,"
                               "bytes_per_server,client_bytes,rounds",
                               0),
            0u);
  BenchRecord r;
  r.mode = "ivf";
  r.metric = "dot";
  r.n = 100;
  r.recall = 0.5;
  const std::string row = csv_row(r);
  const std::string header = csv_header();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
  EXPECT_EQ(row.rfind("ivf,dot,100,", 0), 0u);
}

TEST(Sweep, SmallGridProducesBoundedMetrics) {
  SweepConfig c;
  parse_distribution("blobs(4,0.1)", c.data);
  c.data.d = 8;
  c.sizes = {120};
  c.modes = {QueryMode::kExact, QueryMode::kIvf, QueryMode::kIvfLeaky};
  c.ks = {3};
  c.n_probes = {1, 11};
  c.noise_sigmas = {0.0, 0.2};
  c.queries = 2;
  size_t seen = 0;
  const auto recs = run_sweep(c, [&](const BenchRecord&) { ++seen; });
  // exact, ivf x 2 probes, leaky x 2 probes x 2 sigmas
  ASSERT_EQ(recs.size(), 7u);
  EXPECT_EQ(seen, 7u);
  for (const auto& r : recs) {
    EXPECT_GE(r.recall, 0.0);
    EXPECT_LE(r.recall, 1.0);
    EXPECT_GT(r.bytes_per_server, 0.0);
    EXPECT_GT(r.rounds, 0.0);
    if (r.mode == "exact") EXPECT_EQ(r.recall, 1.0);
  }
}

}  // namespace
}  // namespace vecmpc
