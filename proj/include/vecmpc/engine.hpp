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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vecmpc/ivf.hpp"
#include "vecmpc/mpc.hpp"
#include "vecmpc/net.hpp"
#include "vecmpc/preproc.hpp"

namespace vecmpc {

enum class QueryMode : uint16_t { kExact = 0, kIvf = 1, kIvfLeaky = 2 };

const char* mode_name(QueryMode mode);
// "exact", "ivf", "ivf_leaky" (also "leaky").
QueryMode parse_mode(const std::string& name);

struct QueryConfig {
  Metric metric = Metric::kDot;
  size_t k = 10;
  size_t n_probe = 1;
  QueryMode mode = QueryMode::kExact;
  double noise_sigma = 0;     // ivf_leaky only
  uint64_t noise_seed = 0;
};

// What the client and every server know about the shared index.
struct PublicIndexInfo {
  uint32_t n_rows = 0;
  uint32_t dim = 0;
  uint32_t payload_width = 0;
  uint32_t n_clusters = 0;
  uint32_t cluster_size = 0;
  Metric metric = Metric::kDot;
  bool has_flat = false;
  bool has_ivf = false;

  static PublicIndexInfo of(const SharedIndex& shard);
};

// Throws ParameterError for k, n_probe or mode the index cannot serve.
void validate_query(const QueryConfig& config, const PublicIndexInfo& info);

// Public query parameters the client sends ahead of its shares.
struct QueryHeader {
  QueryMode mode = QueryMode::kExact;
  Metric metric = Metric::kDot;
  uint64_t k = 0;
  uint64_t n_probe = 0;
  // Query elements that follow: d, or 2d when the leaky variant routes on a
  // separately noised copy.
  uint64_t query_elements = 0;

  std::vector<uint8_t> encode() const;
  static QueryHeader decode(std::span<const uint8_t> bytes);
};

// q + N(0, sigma^2 I), re-normalized for cosine. sigma = 0 returns q.
std::vector<float> noise_query(std::span<const float> q, double sigma, uint64_t seed,
                               Metric metric);

// Server side of one query session: reads the header and query shares from
// `client`, runs the pipeline selected by the header and sends the result
// shares back. Returns the cluster ids opened in leaky mode (empty
// otherwise).
std::vector<uint32_t> serve_query(PartyContext& ctx, const SharedIndex& shard, PartyId client);
// Same, for a header the caller already took off the transport.
std::vector<uint32_t> serve_session(PartyContext& ctx, const SharedIndex& shard, PartyId client,
                                    const QueryHeader& header);

// A shard with the public parameters of `info` and all-zero shares.
SharedIndex blank_shard(const PublicIndexInfo& info, PartyId party, const ShareScheme& scheme,
                        int frac_bits);

// Dealer requests one server issues for a query with these public
// parameters, in order. Found by running the query once on blank shards;
// the sequence depends on public parameters only.
std::vector<MaterialRequest> plan_query_material(const PublicIndexInfo& info,
                                                 const ShareScheme& scheme,
                                                 const QueryConfig& config,
                                                 const FixedPointCodec& codec = {});

struct QueryStats {
  std::vector<TrafficStats> servers;
  TrafficStats client;
  uint32_t rounds = 0;
  double wall_ms = 0;
  double preprocessing_ms = 0;
  double online_ms = 0;
};

struct RetrievalResult {
  std::vector<uint32_t> indices;  // best first, padding dropped
  std::vector<std::vector<uint8_t>> payloads;
  QueryStats stats;
};

class Client {
 public:
  Client(ShareScheme scheme, FixedPointCodec codec, Transport& transport, PublicIndexInfo info,
         uint64_t seed);

  // Shares q (normalized for cosine) with every server and waits for the
  // result. Fills result.stats.client.
  RetrievalResult query(uint64_t session_id, std::span<const float> q, const QueryConfig& config,
                        std::chrono::milliseconds timeout = kDefaultRoundTimeout);

  const PublicIndexInfo& info() const { return info_; }

 private:
  ShareScheme scheme_;
  FixedPointCodec codec_;
  Transport& transport_;
  PublicIndexInfo info_;
  Prg prg_;
};

// n servers and a client in one process over a LocalHub, sharing a dealer.
class LocalDeployment {
 public:
  struct Options {
    uint64_t dealer_seed = 1;
    uint64_t client_seed = 2;
    bool record_transcripts = false;
    std::chrono::milliseconds timeout = kDefaultRoundTimeout;
    FixedPointCodec codec;
  };

  LocalDeployment(std::vector<SharedIndex> shards, Options options);

  RetrievalResult query(std::span<const float> q, const QueryConfig& config);

  int n_servers() const { return scheme_.n(); }
  const PublicIndexInfo& info() const { return info_; }
  // Transcripts and leaky-mode openings of the last query, per server.
  const std::vector<Transcript>& last_transcripts() const { return transcripts_; }
  const std::vector<std::vector<uint32_t>>& last_opened_clusters() const { return opened_; }
  // Sees every batch the in-process dealer generates.
  void set_material_sink(SharedDealer::Sink sink) { dealer_.set_sink(std::move(sink)); }

 private:
  std::vector<SharedIndex> shards_;
  Options options_;
  ShareScheme scheme_;
  PublicIndexInfo info_;
  LocalHub hub_;
  SharedDealer dealer_;
  Client client_;
  uint64_t next_session_ = 1;
  std::vector<Transcript> transcripts_;
  std::vector<std::vector<uint32_t>> opened_;
};

}  // namespace vecmpc
