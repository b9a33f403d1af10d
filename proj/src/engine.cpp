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

#include "vecmpc/engine.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "vecmpc/protocols.hpp"

namespace vecmpc {

const char* mode_name(QueryMode mode) {
  switch (mode) {
    case QueryMode::kExact: return "exact";
    case QueryMode::kIvf: return "ivf";
    case QueryMode::kIvfLeaky: return "ivf_leaky";
  }
  return "unknown";
}

QueryMode parse_mode(const std::string& name) {
  if (name == "exact") return QueryMode::kExact;
  if (name == "ivf") return QueryMode::kIvf;
  if (name == "ivf_leaky" || name == "leaky") return QueryMode::kIvfLeaky;
  throw ParameterError("unknown mode '" + name + "'");
}

PublicIndexInfo PublicIndexInfo::of(const SharedIndex& s) {
  PublicIndexInfo info;
  info.n_rows = s.n_rows;
  info.dim = s.dim;
  info.payload_width = s.payload_width;
  info.n_clusters = s.n_clusters;
  info.cluster_size = s.cluster_size;
  info.metric = s.metric;
  info.has_flat = s.has_flat;
  info.has_ivf = s.has_ivf;
  return info;
}

void validate_query(const QueryConfig& c, const PublicIndexInfo& info) {
  if (c.metric != info.metric) {
    throw ParameterError(std::string("index was shared for metric ") + metric_name(info.metric) +
                         ", query asks for " + metric_name(c.metric));
  }
  if (c.k < 1) throw ParameterError("k must be at least 1");
  if (c.noise_sigma < 0) throw ParameterError("noise sigma must be non-negative");
  if (c.mode != QueryMode::kIvfLeaky && c.noise_sigma != 0) {
    throw ParameterError("query noise is only used by the leaky IVF mode");
  }
  if (c.mode == QueryMode::kExact) {
    if (!info.has_flat) throw ParameterError("index has no flat database for exact search");
    if (c.k > info.n_rows) {
      throw ParameterError("k=" + std::to_string(c.k) + " exceeds N=" + std::to_string(info.n_rows));
    }
    return;
  }
  if (!info.has_ivf) throw ParameterError("index has no IVF section");
  if (c.n_probe < 1 || c.n_probe > info.n_clusters) {
    throw ParameterError("n_probe=" + std::to_string(c.n_probe) + " outside [1, n_c=" +
                         std::to_string(info.n_clusters) + "]");
  }
  if (c.k > c.n_probe * info.cluster_size) {
    throw ParameterError("k exceeds the number of candidates n_probe * m");
  }
}

namespace {
constexpr uint64_t kHeaderMagic = 0x31484456ULL;  // "VDH1"
}

std::vector<uint8_t> QueryHeader::encode() const {
  std::vector<uint8_t> out;
  put_u64(out, kHeaderMagic);
  put_u64(out, static_cast<uint64_t>(mode));
  put_u64(out, static_cast<uint64_t>(metric));
  put_u64(out, k);
  put_u64(out, n_probe);
  put_u64(out, query_elements);
  return out;
}

QueryHeader QueryHeader::decode(std::span<const uint8_t> bytes) {
  if (bytes.size() != 48 || get_u64(bytes.data()) != kHeaderMagic) {
    throw ProtocolError("malformed query header");
  }
  QueryHeader h;
  const uint64_t mode = get_u64(bytes.data() + 8);
  const uint64_t metric = get_u64(bytes.data() + 16);
  if (mode > 2 || metric > 2) throw ProtocolError("query header has unknown mode or metric");
  h.mode = static_cast<QueryMode>(mode);
  h.metric = static_cast<Metric>(metric);
  h.k = get_u64(bytes.data() + 24);
  h.n_probe = get_u64(bytes.data() + 32);
  h.query_elements = get_u64(bytes.data() + 40);
  return h;
}

std::vector<float> noise_query(std::span<const float> q, double sigma, uint64_t seed,
                               Metric metric) {
  if (sigma < 0) throw ParameterError("noise sigma must be non-negative");
  std::vector<float> out(q.begin(), q.end());
  if (sigma > 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (float& v : out) v = static_cast<float>(v + noise(rng));
  }
  if (metric == Metric::kCosine) normalize_in_place(out);
  return out;
}

namespace {

// Scores the candidate records, adds the padding penalty, takes the top k
// and selects [db index | payload] of each winner.
ShareMatrix rank_candidates(PartyContext& ctx, std::span<const Fp> q, const ShareMatrix& cand,
                            const SharedIndex& shard, size_t k) {
  const size_t rw = shard.record_width();
  const size_t rows = cand.rows * shard.cluster_size;
  const MatrixView records{cand.data.data(), rows, rw, rw};
  ShareVector scores = ranking_scores(ctx, shard.metric, q, records.columns(0, shard.dim));
  const Fp lift = precision_lift(ctx.codec());
  for (size_t i = 0; i < rows; ++i) scores[i] += lift * cand.data[i * rw + shard.penalty_column()];
  const auto top = exact_topk(ctx, scores, k, Precision::kDouble);
  return oblivious_select(ctx, top, records.columns(shard.index_column(), 1 + shard.payload_elems()));
}

ShareMatrix exact_pipeline(PartyContext& ctx, std::span<const Fp> q, const SharedIndex& shard,
                           size_t k) {
  const ShareVector scores = ranking_scores(ctx, shard.metric, q, shard.flat.view());
  const auto top = exact_topk(ctx, scores, k, Precision::kDouble);
  const size_t pw = shard.payload_elems();
  ShareMatrix out(k, 1 + pw);
  for (size_t j = 0; j < k; ++j) out.at(j, 0) = onehot_position(top[j]);
  if (pw > 0) {
    const ShareMatrix rows = oblivious_select(ctx, top, shard.payload.view());
    for (size_t j = 0; j < k; ++j) {
      std::copy(rows.row(j).begin(), rows.row(j).end(), out.row(j).begin() + 1);
    }
  }
  return out;
}

ShareMatrix ivf_pipeline(PartyContext& ctx, std::span<const Fp> q, std::span<const Fp> route,
                         const SharedIndex& shard, size_t k, size_t n_probe) {
  const ShareVector cscores = ranking_scores(ctx, shard.metric, route, shard.centroids.view());
  const auto buckets = exact_topk(ctx, cscores, n_probe, Precision::kDouble);
  const ShareMatrix cand = oblivious_select(ctx, buckets, shard.clusters.view());
  return rank_candidates(ctx, q, cand, shard, k);
}

ShareMatrix leaky_pipeline(PartyContext& ctx, std::span<const Fp> q, std::span<const Fp> route,
                           const SharedIndex& shard, size_t k, size_t n_probe,
                           std::vector<uint32_t>& opened) {
  const ShareVector cscores = ranking_scores(ctx, shard.metric, route, shard.centroids.view());
  const auto buckets = exact_topk(ctx, cscores, n_probe, Precision::kDouble);
  ShareMatrix ids(n_probe, 1);
  for (size_t j = 0; j < n_probe; ++j) ids.at(j, 0) = onehot_position(buckets[j]);
  // Shuffle with a dealer permutation before opening so the rank order of
  // the probed clusters stays hidden.
  const MaterialBatch perm = ctx.take(
      {MaterialKind::kPermutation, 1, static_cast<uint32_t>(n_probe), 0, 0});
  const ShareMatrix shuffled = matmult(ctx, MatrixView{perm.data.data(), n_probe, n_probe, n_probe},
                                       ids.view(), ProductKind::kInteger);
  const std::vector<Fp> public_ids = ctx.open_values(shuffled.data, ctx.t(), MessageKind::kReveal);

  const size_t width = shard.clusters.cols;
  ShareMatrix cand(n_probe, width);
  std::set<uint64_t> seen;
  for (size_t j = 0; j < n_probe; ++j) {
    const uint64_t id = public_ids[j].value();
    if (id >= shard.n_clusters || !seen.insert(id).second) {
      throw ProtocolError("opened cluster ids are not a set of valid clusters");
    }
    opened.push_back(static_cast<uint32_t>(id));
    const auto src = shard.clusters.row(id);
    std::copy(src.begin(), src.end(), cand.row(j).begin());
  }
  return rank_candidates(ctx, q, cand, shard, k);
}

}  // namespace

std::vector<uint32_t> serve_query(PartyContext& ctx, const SharedIndex& shard, PartyId client) {
  const QueryHeader header =
      QueryHeader::decode(ctx.session().receive(client, MessageKind::kQueryHeader, 0));
  return serve_session(ctx, shard, client, header);
}

std::vector<uint32_t> serve_session(PartyContext& ctx, const SharedIndex& shard, PartyId client,
                                    const QueryHeader& header) {
  Session& session = ctx.session();
  QueryConfig config;
  config.metric = header.metric;
  config.mode = header.mode;
  config.k = header.k;
  config.n_probe = header.n_probe;
  validate_query(config, PublicIndexInfo::of(shard));
  const size_t d = shard.dim;
  const bool split_route = header.mode == QueryMode::kIvfLeaky && header.query_elements == 2 * d;
  if (header.query_elements != d && !split_route) {
    throw ProtocolError("query carries " + std::to_string(header.query_elements) +
                        " elements, expected " + std::to_string(d));
  }
  const std::vector<Fp> input = unpack_elements(session.receive(client, MessageKind::kQueryInput, 0));
  if (input.size() != header.query_elements) throw ProtocolError("query share count mismatch");
  const std::span<const Fp> q(input.data(), d);
  const std::span<const Fp> route = split_route ? std::span<const Fp>(input.data() + d, d) : q;

  std::vector<uint32_t> opened;
  ShareMatrix result;
  switch (header.mode) {
    case QueryMode::kExact:
      result = exact_pipeline(ctx, q, shard, header.k);
      break;
    case QueryMode::kIvf:
      result = ivf_pipeline(ctx, q, route, shard, header.k, header.n_probe);
      break;
    case QueryMode::kIvfLeaky:
      result = leaky_pipeline(ctx, q, route, shard, header.k, header.n_probe, opened);
      break;
  }
  session.send(client, MessageKind::kResult, kResultRound, pack_elements(result.data));
  return opened;
}

SharedIndex blank_shard(const PublicIndexInfo& info, PartyId party, const ShareScheme& scheme,
                        int frac_bits) {
  SharedIndex s;
  s.party = party;
  s.n_servers = scheme.n();
  s.threshold = scheme.t();
  s.frac_bits = frac_bits;
  s.metric = info.metric;
  s.n_rows = info.n_rows;
  s.dim = info.dim;
  s.payload_width = info.payload_width;
  s.n_clusters = info.n_clusters;
  s.cluster_size = info.cluster_size;
  s.has_flat = info.has_flat;
  s.has_ivf = info.has_ivf;
  if (s.has_flat) {
    s.flat = ShareMatrix(s.n_rows, s.dim);
    s.payload = ShareMatrix(s.n_rows, s.payload_elems());
  }
  if (s.has_ivf) {
    s.centroids = ShareMatrix(s.n_clusters, s.dim);
    s.clusters = ShareMatrix(s.n_clusters, size_t{s.cluster_size} * s.record_width());
  }
  return s;
}

std::vector<MaterialRequest> plan_query_material(const PublicIndexInfo& info,
                                                 const ShareScheme& scheme,
                                                 const QueryConfig& config,
                                                 const FixedPointCodec& codec) {
  validate_query(config, info);
  std::vector<SharedIndex> shards;
  for (int p = 0; p < scheme.n(); ++p) {
    shards.push_back(blank_shard(info, static_cast<PartyId>(p), scheme, codec.frac_bits));
  }
  LocalDeployment::Options opts;
  opts.codec = codec;
  LocalDeployment dep(std::move(shards), opts);
  std::vector<MaterialRequest> plan;
  dep.set_material_sink([&](const std::vector<MaterialBatch>& batches) {
    plan.push_back(batches.front().request);
  });
  std::vector<float> q(info.dim, 0.0f);
  q[0] = 1.0f;
  dep.query(q, config);
  return plan;
}

Client::Client(ShareScheme scheme, FixedPointCodec codec, Transport& transport,
               PublicIndexInfo info, uint64_t seed)
    : scheme_(std::move(scheme)),
      codec_(codec),
      transport_(transport),
      info_(info),
      prg_(seed, 0x636c69656e74ULL) {}

RetrievalResult Client::query(uint64_t session_id, std::span<const float> q,
                              const QueryConfig& config, std::chrono::milliseconds timeout) {
  validate_query(config, info_);
  if (q.size() != info_.dim) {
    throw DimensionError("query has " + std::to_string(q.size()) + " entries, index has d=" +
                         std::to_string(info_.dim));
  }
  std::vector<float> qv(q.begin(), q.end());
  if (config.metric == Metric::kCosine) normalize_in_place(qv);
  std::vector<Fp> encoded = codec_.encode_all(std::span<const float>(qv));
  if (config.mode == QueryMode::kIvfLeaky && config.noise_sigma > 0) {
    const auto routed = noise_query(qv, config.noise_sigma, config.noise_seed, config.metric);
    const auto enc_route = codec_.encode_all(std::span<const float>(routed));
    encoded.insert(encoded.end(), enc_route.begin(), enc_route.end());
  }

  QueryHeader header;
  header.mode = config.mode;
  header.metric = config.metric;
  header.k = config.k;
  header.n_probe = config.mode == QueryMode::kExact ? 0 : config.n_probe;
  header.query_elements = encoded.size();

  const auto shares = share_batch(encoded, scheme_.t(), scheme_, prg_);
  Session session(transport_, session_id, timeout);
  const auto header_bytes = header.encode();
  for (int p = 0; p < scheme_.n(); ++p) {
    session.send(static_cast<PartyId>(p), MessageKind::kQueryHeader, 0, header_bytes);
    session.send(static_cast<PartyId>(p), MessageKind::kQueryInput, 0, pack_elements(shares[p]));
  }

  const size_t pw = payload_elements(info_.payload_width);
  const size_t expected = config.k * (1 + pw);
  std::vector<std::vector<Fp>> per_party(scheme_.n());
  for (int p = 0; p < scheme_.n(); ++p) {
    per_party[p] = unpack_elements(
        session.receive(static_cast<PartyId>(p), MessageKind::kResult, kResultRound));
    if (per_party[p].size() != expected) throw ProtocolError("result share count mismatch");
  }
  const std::vector<Fp> values = reveal_batch(per_party, scheme_.t(), scheme_);

  RetrievalResult out;
  for (size_t j = 0; j < config.k; ++j) {
    const uint64_t idx = values[j * (1 + pw)].value();
    if (idx == info_.n_rows) continue;  // padding slot
    if (idx > info_.n_rows) throw ProtocolError("result index out of range");
    out.indices.push_back(static_cast<uint32_t>(idx));
    if (info_.payload_width > 0) {
      out.payloads.push_back(unpack_payload(
          std::span<const Fp>(values.data() + j * (1 + pw) + 1, pw), info_.payload_width));
    }
  }
  out.stats.client = session.stats();
  return out;
}

LocalDeployment::LocalDeployment(std::vector<SharedIndex> shards, Options options)
    : shards_(std::move(shards)),
      options_(options),
      scheme_(shards_.empty() ? throw ParameterError("no shards") : shards_.front().n_servers,
              shards_.front().threshold),
      info_(PublicIndexInfo::of(shards_.front())),
      hub_(scheme_.n() + 1),
      dealer_(scheme_, options.dealer_seed),
      client_(scheme_, options.codec, hub_.endpoint(static_cast<PartyId>(scheme_.n())), info_,
              options.client_seed) {
  if (static_cast<int>(shards_.size()) != scheme_.n()) {
    throw ParameterError("expected one shard per server");
  }
  for (int p = 0; p < scheme_.n(); ++p) {
    if (shards_[p].party != p) throw ParameterError("shards out of party order");
    if (shards_[p].frac_bits != options_.codec.frac_bits) {
      throw ParameterError("shard precision does not match the codec");
    }
  }
}

RetrievalResult LocalDeployment::query(std::span<const float> q, const QueryConfig& config) {
  validate_query(config, info_);
  if (q.size() != info_.dim) {
    throw DimensionError("query has " + std::to_string(q.size()) + " entries, index has d=" +
                         std::to_string(info_.dim));
  }
  const uint64_t sid = next_session_++;
  const int n = scheme_.n();
  const PartyId client_id = static_cast<PartyId>(n);
  std::vector<TrafficStats> stats(n);
  transcripts_.assign(n, {});
  opened_.assign(n, {});
  std::mutex mu;
  // First failure wins; the others are usually the abort it caused.
  std::exception_ptr first_error;

  const double gen_before = dealer_.generation_seconds();
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  for (int p = 0; p < n; ++p) {
    threads.emplace_back([&, p] {
      try {
        Session session(hub_.endpoint(static_cast<PartyId>(p)), sid, options_.timeout,
                        options_.record_transcripts);
        auto source = dealer_.source_for(static_cast<PartyId>(p));
        PartyContext ctx(scheme_, options_.codec, session, *source);
        opened_[p] = serve_query(ctx, shards_[p], client_id);
        stats[p] = session.stats();
        transcripts_[p] = session.transcript();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        hub_.abort_session(sid, "server " + std::to_string(p) + " failed");
      }
    });
  }
  RetrievalResult result;
  try {
    result = client_.query(sid, q, config, options_.timeout);
  } catch (...) {
    {
      std::lock_guard lock(mu);
      if (!first_error) first_error = std::current_exception();
    }
    hub_.abort_session(sid, "client failed");
  }
  for (auto& t : threads) t.join();
  const auto end = std::chrono::steady_clock::now();
  if (first_error) std::rethrow_exception(first_error);

  result.stats.servers = stats;
  result.stats.rounds = stats.front().rounds;
  result.stats.wall_ms = std::chrono::duration<double, std::milli>(end - start).count();
  result.stats.preprocessing_ms = (dealer_.generation_seconds() - gen_before) * 1000.0;
  result.stats.online_ms = result.stats.wall_ms - result.stats.preprocessing_ms;
  return result;
}

}  // namespace vecmpc
