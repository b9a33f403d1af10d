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

#include <set>

#include "engine_fixtures.hpp"

namespace vecmpc {
namespace {

using testing::deploy;
using testing::query_config;
using testing::sorted;

EmbeddingMatrix gauss_rows(uint32_t n, uint32_t d, double sigma, uint64_t seed,
                           uint64_t stream = 0) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.b = sigma;
  spec.seed = seed;
  return gen_synthetic(spec, stream);
}

TEST(QueryHeader, RoundTrip) {
  QueryHeader h;
  h.mode = QueryMode::kIvfLeaky;
  h.metric = Metric::kSqEuclidean;
  h.k = 7;
  h.n_probe = 3;
  h.query_elements = 64;
  const QueryHeader b = QueryHeader::decode(h.encode());
  EXPECT_EQ(b.mode, h.mode);
  EXPECT_EQ(b.metric, h.metric);
  EXPECT_EQ(b.k, 7u);
  EXPECT_EQ(b.n_probe, 3u);
  EXPECT_EQ(b.query_elements, 64u);
  auto bytes = h.encode();
  bytes[0] ^= 1;
  EXPECT_THROW(QueryHeader::decode(bytes), ProtocolError);
  bytes.pop_back();
  EXPECT_THROW(QueryHeader::decode(bytes), ProtocolError);
}

TEST(QueryConfig, Validation) {
  PublicIndexInfo info;
  info.n_rows = 100;
  info.dim = 4;
  info.n_clusters = 10;
  info.cluster_size = 13;
  info.metric = Metric::kDot;
  info.has_flat = true;
  info.has_ivf = true;
  EXPECT_NO_THROW(validate_query(query_config(QueryMode::kExact, Metric::kDot, 100), info));
  EXPECT_THROW(validate_query(query_config(QueryMode::kExact, Metric::kDot, 101), info),
               ParameterError);
  EXPECT_THROW(validate_query(query_config(QueryMode::kExact, Metric::kDot, 0), info),
               ParameterError);
  EXPECT_THROW(validate_query(query_config(QueryMode::kExact, Metric::kCosine, 1), info),
               ParameterError);
  EXPECT_THROW(validate_query(query_config(QueryMode::kIvf, Metric::kDot, 1, 11), info),
               ParameterError);
  EXPECT_THROW(validate_query(query_config(QueryMode::kIvf, Metric::kDot, 1, 0), info),
               ParameterError);
  EXPECT_THROW(validate_query(query_config(QueryMode::kIvf, Metric::kDot, 14, 1), info),
               ParameterError);
  EXPECT_THROW(validate_query(query_config(QueryMode::kIvf, Metric::kDot, 1, 1, 0.1), info),
               ParameterError);
  EXPECT_NO_THROW(validate_query(query_config(QueryMode::kIvfLeaky, Metric::kDot, 1, 1, 0.1), info));
  info.has_flat = false;
  EXPECT_THROW(validate_query(query_config(QueryMode::kExact, Metric::kDot, 1), info),
               ParameterError);
  EXPECT_EQ(parse_mode("leaky"), QueryMode::kIvfLeaky);
  EXPECT_STREQ(mode_name(QueryMode::kIvf), "ivf");
  EXPECT_THROW(parse_mode("fast"), ParameterError);
}

TEST(NoiseQuery, ZeroSigmaIsIdentity) {
  const std::vector<float> q = {0.5f, -1.25f, 2.0f};
  EXPECT_EQ(noise_query(q, 0.0, 3, Metric::kDot), q);
  EXPECT_THROW(noise_query(q, -1.0, 3, Metric::kDot), ParameterError);
}

TEST(NoiseQuery, CosineIsRenormalized) {
  const std::vector<float> q = {0.6f, 0.8f, 0.0f, 0.0f};
  const auto out = noise_query(q, 0.3, 11, Metric::kCosine);
  double norm = 0;
  for (float v : out) norm += double{v} * v;
  EXPECT_NEAR(norm, 1.0, 1e-6);
}

TEST(NoiseQuery, ExpectedSquaredShift) {
  const uint32_t d = 32;
  const double sigma = 0.2;
  const std::vector<float> q(d, 0.1f);
  double total = 0;
  const int draws = 1000;
  for (int s = 0; s < draws; ++s) {
    const auto out = noise_query(q, sigma, 1000 + s, Metric::kDot);
    for (uint32_t j = 0; j < d; ++j) total += (double{out[j]} - q[j]) * (double{out[j]} - q[j]);
  }
  const double mean = total / draws;
  EXPECT_NEAR(mean / (sigma * sigma * d), 1.0, 0.1);
}

TEST(ExactQuery, StoredRowFindsItself) {
  const EmbeddingMatrix rows = prepare_rows(gauss_rows(64, 16, 1.0, 4), Metric::kCosine);
  LocalDeployment dep = deploy(nullptr, rows, nullptr, Metric::kCosine, 3, {true, false});
  for (uint32_t i : {0u, 17u, 63u}) {
    const auto r = dep.query(rows.row(i), query_config(QueryMode::kExact, Metric::kCosine, 1));
    ASSERT_EQ(r.indices.size(), 1u);
    EXPECT_EQ(r.indices[0], i);
  }
}

TEST(ExactQuery, TopFiftyF1OnGaussianData) {
  const EmbeddingMatrix rows = gauss_rows(256, 32, 0.05, 8);
  const EmbeddingMatrix qs = gauss_rows(3, 32, 0.05, 8, 1);
  LocalDeployment dep = deploy(nullptr, rows, nullptr, Metric::kDot, 3, {true, false});
  for (uint32_t i = 0; i < qs.rows; ++i) {
    const auto r = dep.query(qs.row(i), query_config(QueryMode::kExact, Metric::kDot, 50));
    const auto m = eval_retrieval(r.indices, plain_exact_topk(Metric::kDot, qs.row(i), rows, 50));
    EXPECT_GE(m.f1, 0.98) << "query " << i;
  }
}

TEST(ExactQuery, PayloadsFollowIndices) {
  const EmbeddingMatrix rows = gauss_rows(40, 8, 1.0, 5);
  PayloadTable pay{40, 10, {}};
  for (uint32_t i = 0; i < 40 * 10; ++i) pay.bytes.push_back(static_cast<uint8_t>(i * 31 + 7));
  LocalDeployment dep = deploy(nullptr, rows, &pay, Metric::kSqEuclidean, 3, {true, false});
  const auto r = dep.query(rows.row(9), query_config(QueryMode::kExact, Metric::kSqEuclidean, 4));
  ASSERT_EQ(r.indices.size(), 4u);
  EXPECT_EQ(r.indices[0], 9u);
  ASSERT_EQ(r.payloads.size(), 4u);
  for (size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(r.payloads[j], std::vector<uint8_t>(pay.row(r.indices[j]).begin(),
                                                  pay.row(r.indices[j]).end()));
  }
}

TEST(ExactQuery, RejectsBadInput) {
  const EmbeddingMatrix rows = gauss_rows(20, 4, 1.0, 2);
  LocalDeployment dep = deploy(nullptr, rows, nullptr, Metric::kDot, 3, {true, false});
  EXPECT_THROW(dep.query(rows.row(0), query_config(QueryMode::kExact, Metric::kDot, 21)),
               ParameterError);
  const std::vector<float> short_q(3, 0.0f);
  EXPECT_THROW(dep.query(short_q, query_config(QueryMode::kExact, Metric::kDot, 1)),
               DimensionError);
  EXPECT_THROW(dep.query(rows.row(0), query_config(QueryMode::kIvf, Metric::kDot, 1)),
               ParameterError);
  // Still usable afterwards.
  EXPECT_EQ(dep.query(rows.row(0), query_config(QueryMode::kExact, Metric::kDot, 2)).indices.size(),
            2u);
}

struct GapParam {
  Metric metric;
  int n_servers;
};

class GappedOracle : public ::testing::TestWithParam<GapParam> {};

TEST_P(GappedOracle, ExactMatchesBruteForce) {
  const auto [metric, n_servers] = GetParam();
  for (uint32_t n : {1u, 7u, 40u}) {
    const auto c = testing::gapped_case(metric, n, 8, 100 + n);
    ASSERT_GT(testing::min_score_gap(metric, c.q, c.rows), std::ldexp(1.0, -14));
    LocalDeployment dep = deploy(nullptr, c.rows, nullptr, metric, n_servers, {true, false});
    for (uint32_t k : {1u, 5u, n}) {
      if (k > n) continue;
      const auto r = dep.query(c.q, query_config(QueryMode::kExact, metric, k));
      EXPECT_EQ(r.indices, testing::quantized_topk(metric, c.q, c.rows, k))
          << metric_name(metric) << " N=" << n << " k=" << k;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Metrics, GappedOracle,
                         ::testing::Values(GapParam{Metric::kDot, 3}, GapParam{Metric::kCosine, 3},
                                           GapParam{Metric::kSqEuclidean, 3},
                                           GapParam{Metric::kDot, 5},
                                           GapParam{Metric::kSqEuclidean, 7}));

class IvfTwin : public ::testing::Test {
 protected:
  void SetUp() override {
    SyntheticSpec spec;
    spec.distribution = Distribution::kBlobs;
    spec.n = 256;
    spec.d = 16;
    spec.a = 12;
    spec.b = 0.15;
    spec.seed = 41;
    rows = gen_synthetic(spec);
    spec.n = 4;
    queries = gen_synthetic(spec, 1);
    IvfParams params;
    params.n_clusters = 16;
    params.cluster_size = 24;
    index = kmeans_build(rows, Metric::kDot, params);
  }

  EmbeddingMatrix rows, queries;
  PlainIvfIndex index;
};

TEST_F(IvfTwin, MatchesPlaintextSimulatorForEveryProbeCount) {
  ASSERT_EQ(index.cluster_size, 24u);
  const EmbeddingMatrix qrows = quantized(rows, {});
  LocalDeployment dep = deploy(&index, rows, nullptr, Metric::kDot, 3, {false, true});
  for (uint32_t n_probe = 1; n_probe <= 16; ++n_probe) {
    for (uint32_t qi = 0; qi < 2; ++qi) {
      const auto q = queries.row(qi);
      const auto trace = plain_ivf_search(index, qrows, q, 5, n_probe);
      const auto r = dep.query(q, query_config(QueryMode::kIvf, Metric::kDot, 5, n_probe));
      EXPECT_EQ(r.indices, trace.result) << "n_probe=" << n_probe << " q=" << qi;
      // Results come from the probed clusters only.
      std::set<uint32_t> allowed;
      for (uint32_t c : trace.probed) allowed.insert(index.members[c].begin(), index.members[c].end());
      for (uint32_t i : r.indices) EXPECT_TRUE(allowed.count(i));
    }
  }
}

TEST_F(IvfTwin, AllClustersEqualsExact) {
  LocalDeployment dep = deploy(&index, rows, nullptr, Metric::kDot, 3);
  for (uint32_t qi = 0; qi < queries.rows; ++qi) {
    const auto ivf = dep.query(queries.row(qi), query_config(QueryMode::kIvf, Metric::kDot, 8, 16));
    const auto exact = dep.query(queries.row(qi), query_config(QueryMode::kExact, Metric::kDot, 8));
    EXPECT_EQ(sorted(ivf.indices), sorted(exact.indices));
  }
}

TEST_F(IvfTwin, PaddingNeverReturned) {
  // k larger than the real members of one cluster forces padding into the
  // candidate top k; those slots are dropped, never reported as N.
  LocalDeployment dep = deploy(&index, rows, nullptr, Metric::kDot, 3, {false, true});
  const auto trace = plain_ivf_search(index, rows, queries.row(0), 24, 1);
  const auto r = dep.query(queries.row(0), query_config(QueryMode::kIvf, Metric::kDot, 24, 1));
  EXPECT_EQ(r.indices.size(), index.members[trace.probed[0]].size());
  for (uint32_t i : r.indices) EXPECT_LT(i, 256u);
}

TEST_F(IvfTwin, LeakyWithoutNoiseMatchesIvf) {
  LocalDeployment dep = deploy(&index, rows, nullptr, Metric::kDot, 3, {false, true}, true);
  for (uint32_t n_probe : {1u, 4u, 9u}) {
    for (uint32_t qi = 0; qi < queries.rows; ++qi) {
      const auto q = queries.row(qi);
      const auto ivf = dep.query(q, query_config(QueryMode::kIvf, Metric::kDot, 5, n_probe));
      const auto leaky = dep.query(q, query_config(QueryMode::kIvfLeaky, Metric::kDot, 5, n_probe));
      EXPECT_EQ(sorted(leaky.indices), sorted(ivf.indices));
      const auto trace = plain_ivf_search(index, quantized(rows, {}), q, 5, n_probe);
      for (const auto& opened : dep.last_opened_clusters()) {
        EXPECT_EQ(sorted(opened), sorted(trace.probed));
      }
    }
  }
}

TEST_F(IvfTwin, LeakyOpeningsAreShuffled) {
  LocalDeployment dep = deploy(&index, rows, nullptr, Metric::kDot, 3, {false, true});
  std::set<std::vector<uint32_t>> orders;
  std::vector<uint32_t> set0;
  for (int rep = 0; rep < 8; ++rep) {
    dep.query(queries.row(0), query_config(QueryMode::kIvfLeaky, Metric::kDot, 3, 6));
    const auto& opened = dep.last_opened_clusters()[0];
    if (rep == 0) set0 = sorted(opened);
    EXPECT_EQ(sorted(opened), set0);
    orders.insert(opened);
  }
  EXPECT_GT(orders.size(), 1u);
}

TEST_F(IvfTwin, LeakyTranscriptOpensOnlyClusterIds) {
  LocalDeployment dep = deploy(&index, rows, nullptr, Metric::kDot, 3, {false, true}, true);
  const uint32_t n_probe = 5;
  dep.query(queries.row(1), query_config(QueryMode::kIvfLeaky, Metric::kDot, 4, n_probe));
  for (const auto& transcript : dep.last_transcripts()) {
    size_t reveal_msgs = 0;
    for (const auto& e : transcript) {
      if (e.kind == MessageKind::kReveal) {
        ++reveal_msgs;
        EXPECT_EQ(e.payload.size(), n_probe * 8u);
      }
      // Everything else a server opens is masked protocol traffic.
      EXPECT_TRUE(e.kind == MessageKind::kReveal || e.kind == MessageKind::kMulOpen ||
                  e.kind == MessageKind::kTruncOpen || e.kind == MessageKind::kCompareOpen ||
                  e.kind == MessageKind::kQueryHeader || e.kind == MessageKind::kQueryInput ||
                  e.kind == MessageKind::kResult)
          << message_kind_name(e.kind);
    }
    // Sent to and received from each of the two peers.
    EXPECT_EQ(reveal_msgs, 4u);
  }
  // The fully oblivious pipeline opens nothing in the clear.
  dep.query(queries.row(1), query_config(QueryMode::kIvf, Metric::kDot, 4, n_probe));
  for (const auto& transcript : dep.last_transcripts()) {
    for (const auto& e : transcript) EXPECT_NE(e.kind, MessageKind::kReveal);
  }
}

TEST_F(IvfTwin, TranscriptShapeIndependentOfQuery) {
  LocalDeployment dep = deploy(&index, rows, nullptr, Metric::kDot, 3, {false, true}, true);
  auto shape = [&](uint32_t qi) {
    dep.query(queries.row(qi), query_config(QueryMode::kIvf, Metric::kDot, 5, 3));
    std::vector<std::tuple<bool, uint32_t, PartyId, MessageKind, size_t>> s;
    for (const auto& e : dep.last_transcripts()[1]) {
      s.emplace_back(e.outgoing, e.round, e.peer, e.kind, e.payload.size());
    }
    return s;
  };
  const auto a = shape(0);
  const auto b = shape(3);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(ClientTraffic, UploadIndependentOfN) {
  std::vector<uint64_t> uploads;
  for (uint32_t n : {32u, 128u}) {
    const EmbeddingMatrix rows = gauss_rows(n, 12, 1.0, n);
    LocalDeployment dep = deploy(nullptr, rows, nullptr, Metric::kDot, 3, {true, false});
    const auto r = dep.query(rows.row(0), query_config(QueryMode::kExact, Metric::kDot, 2));
    uploads.push_back(r.stats.client.bytes_sent);
  }
  EXPECT_EQ(uploads[0], uploads[1]);
  // d elements per server, plus the header and envelope framing.
  EXPECT_EQ(uploads[0], 3 * (12 * 8 + 48 + 2 * kEnvelopeHeaderBytes));
}

TEST(MultiServer, IvfAcrossServerCounts) {
  SyntheticSpec spec;
  spec.distribution = Distribution::kBlobs;
  spec.n = 120;
  spec.d = 8;
  spec.a = 6;
  spec.b = 0.1;
  const EmbeddingMatrix rows = gen_synthetic(spec);
  spec.n = 2;
  const EmbeddingMatrix qs = gen_synthetic(spec, 1);
  const PlainIvfIndex index = kmeans_build(rows, Metric::kSqEuclidean, {});
  for (int n : {5, 7}) {
    LocalDeployment dep = deploy(&index, rows, nullptr, Metric::kSqEuclidean, n);
    for (uint32_t qi = 0; qi < qs.rows; ++qi) {
      const auto trace = plain_ivf_search(index, quantized(rows, {}), qs.row(qi), 3, 2);
      const auto r = dep.query(qs.row(qi), query_config(QueryMode::kIvf, Metric::kSqEuclidean, 3, 2));
      EXPECT_EQ(r.indices, trace.result) << "n=" << n;
    }
  }
}

}  // namespace
}  // namespace vecmpc
