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

// vecmpc command-line tool. Exit codes: 0 ok, 1 usage, 2 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "vecmpc/bench.hpp"
#include "vecmpc/engine.hpp"
#include "vecmpc/tcp.hpp"

namespace vecmpc {
namespace {

using nlohmann::json;

// Raised for bad flag combinations found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<PeerAddress> parse_peers(const std::string& text) {
  std::vector<PeerAddress> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_address(item));
  if (out.size() < 3) throw UsageError("--peers needs at least 3 server addresses");
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v;
    if (!(is >> v) || !is.eof()) throw UsageError(std::string("bad value '") + item + "' in " + what);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty list for ") + what);
  return out;
}

std::string party_path(const std::string& prefix, int party, const char* ext) {
  return prefix + "." + std::to_string(party) + ext;
}

json info_json(const SharedIndex& s) {
  return {{"n_servers", s.n_servers},   {"threshold", s.threshold},
          {"frac_bits", s.frac_bits},   {"metric", metric_name(s.metric)},
          {"n_rows", s.n_rows},         {"dim", s.dim},
          {"payload_width", s.payload_width}, {"n_clusters", s.n_clusters},
          {"cluster_size", s.cluster_size},   {"has_flat", s.has_flat},
          {"has_ivf", s.has_ivf}};
}

struct PublicParams {
  PublicIndexInfo info;
  int n_servers = 3;
  int threshold = 1;
  int frac_bits = 16;
};

PublicParams read_public(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  json j;
  try {
    in >> j;
    PublicParams p;
    p.n_servers = j.at("n_servers");
    p.threshold = j.at("threshold");
    p.frac_bits = j.at("frac_bits");
    p.info.metric = parse_metric(j.at("metric"));
    p.info.n_rows = j.at("n_rows");
    p.info.dim = j.at("dim");
    p.info.payload_width = j.at("payload_width");
    p.info.n_clusters = j.at("n_clusters");
    p.info.cluster_size = j.at("cluster_size");
    p.info.has_flat = j.at("has_flat");
    p.info.has_ivf = j.at("has_ivf");
    return p;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

ShareScheme scheme_of(const PublicParams& p) {
  ShareScheme s = ShareScheme::honest_majority(p.n_servers);
  if (s.t() != p.threshold) throw FormatError("index threshold is not floor((n-1)/2)");
  return s;
}

// Query flags shared by dealer and query.
struct QueryFlags {
  std::string mode = "exact";
  uint32_t k = 10;
  uint32_t n_probe = 1;
  double sigma = 0;
  uint64_t noise_seed = 0;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "exact | ivf | ivf_leaky")->capture_default_str();
    app->add_option("-k,--k", k, "results per query")->capture_default_str();
    app->add_option("--n-probe", n_probe, "clusters probed (ivf modes)")->capture_default_str();
    app->add_option("--sigma", sigma, "query noise for ivf_leaky routing")->capture_default_str();
    app->add_option("--noise-seed", noise_seed, "seed of the routing noise");
  }

  QueryConfig config(Metric metric) const {
    QueryConfig c;
    c.mode = parse_mode(mode);
    c.metric = metric;
    c.k = k;
    c.n_probe = c.mode == QueryMode::kExact ? 1 : n_probe;
    c.noise_sigma = sigma;
    c.noise_seed = noise_seed;
    return c;
  }
};

std::string hex(const std::vector<uint8_t>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (uint8_t b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

json stats_json(const QueryStats& s) {
  json servers = json::array();
  for (const auto& t : s.servers) {
    servers.push_back({{"bytes_sent", t.bytes_sent}, {"bytes_received", t.bytes_received},
                       {"rounds", t.rounds}});
  }
  return {{"rounds", s.rounds},
          {"wall_ms", s.wall_ms},
          {"client_bytes_sent", s.client.bytes_sent},
          {"client_bytes_received", s.client.bytes_received},
          {"servers", servers}};
}

int run(int argc, char** argv) {
  CLI::App app{"Secret-shared vector similarity search"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags win");
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic EMB1 embedding file");
  std::string gen_dist = "gauss(0,0.05)", gen_out, gen_payload_out;
  SyntheticSpec gen_spec;
  uint32_t gen_payload_width = 16;
  gen->add_option("--dist", gen_dist, "gauss(mu,sigma) | uniform(a,b) | binary | blobs(count,spread)")
      ->capture_default_str();
  gen->add_option("-n,--n", gen_spec.n, "rows")->capture_default_str();
  gen->add_option("-d,--d", gen_spec.d, "dimension")->capture_default_str();
  gen->add_option("--seed", gen_spec.seed)->capture_default_str();
  gen->add_flag("--normalize", gen_spec.normalize, "L2-normalize rows");
  gen->add_option("-o,--out", gen_out, "EMB1 output")->required();
  gen->add_option("--payload-out", gen_payload_out, "also write a PAY1 file with row labels");
  gen->add_option("--payload-width", gen_payload_width)->capture_default_str();

  // build-index
  auto* build = app.add_subcommand("build-index", "k-means IVF index over an EMB1 file");
  std::string build_data, build_out, build_metric = "dot";
  IvfParams build_params;
  uint32_t build_nc = 0;
  build->add_option("--data", build_data)->required();
  build->add_option("--metric", build_metric)->capture_default_str();
  build->add_option("--alpha", build_params.alpha, "n_c = round(alpha * sqrt(N))")->capture_default_str();
  build->add_option("--n-clusters", build_nc, "override n_c");
  build->add_option("--slack", build_params.slack, "m = ceil(slack * N / n_c)")->capture_default_str();
  build->add_option("--seed", build_params.seed)->capture_default_str();
  build->add_option("-o,--out", build_out, "IVFP output")->required();

  // share-index
  auto* share = app.add_subcommand("share-index", "secret-share database and index into shards");
  std::string share_data, share_index_path, share_payloads, share_prefix, share_metric = "dot";
  int share_servers = 3;
  bool share_no_flat = false;
  share->add_option("--data", share_data)->required();
  share->add_option("--index", share_index_path, "IVFP index (enables ivf modes)");
  share->add_option("--payloads", share_payloads, "PAY1 payload rows");
  share->add_option("--metric", share_metric)->capture_default_str();
  share->add_option("--servers", share_servers)->capture_default_str();
  share->add_flag("--no-flat", share_no_flat, "skip the flat database (no exact mode)");
  share->add_option("-o,--out-prefix", share_prefix, "writes PREFIX.<party>.ivfs and PREFIX.json")
      ->required();

  // dealer
  auto* dealer = app.add_subcommand("dealer", "generate per-server preprocessing files");
  std::string dealer_public, dealer_prefix;
  uint32_t dealer_queries = 1;
  uint64_t dealer_seed = 0;
  QueryFlags dealer_q;
  dealer->add_option("--public", dealer_public, "PREFIX.json written by share-index")->required();
  dealer_q.add(dealer);
  dealer->add_option("--queries", dealer_queries)->capture_default_str();
  dealer->add_option("--seed", dealer_seed, "dealer seed (default: fresh entropy)");
  dealer->add_option("-o,--out-prefix", dealer_prefix, "writes PREFIX.<party>.pre")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "run one server over TCP");
  std::string serve_shard, serve_pre, serve_peers;
  int serve_party = 0;
  uint32_t serve_sessions = 0;
  int serve_timeout_ms = 30000;
  serve->add_option("--shard", serve_shard)->required();
  serve->add_option("--party", serve_party)->required();
  serve->add_option("--peers", serve_peers, "host:port of every server, comma separated")->required();
  serve->add_option("--preproc", serve_pre, "PRE1 file from the dealer")->required();
  serve->add_option("--sessions", serve_sessions, "exit after this many queries (0 = forever)");
  serve->add_option("--timeout-ms", serve_timeout_ms, "per-round timeout")->capture_default_str();

  // query
  auto* query = app.add_subcommand("query", "secret-share queries to running servers");
  std::string query_public, query_peers, query_file, query_out;
  std::vector<uint32_t> query_rows;
  QueryFlags query_q;
  int query_timeout_ms = 30000;
  query->add_option("--public", query_public)->required();
  query->add_option("--peers", query_peers)->required();
  query->add_option("--queries", query_file, "EMB1 file of query vectors")->required();
  query->add_option("--rows", query_rows, "rows of the query file to run (default: all)");
  query_q.add(query);
  query->add_option("--timeout-ms", query_timeout_ms)->capture_default_str();
  query->add_option("-o,--out", query_out, "JSON results (default: stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "benchmark grid, one CSV row per configuration");
  std::string sw_dist = "gauss(0,0.05)", sw_data, sw_sizes = "1000", sw_modes = "exact,ivf",
              sw_ks = "10", sw_probes = "1,2,4,8,16", sw_alphas = "1", sw_servers = "3",
              sw_sigmas = "0", sw_metric = "dot", sw_csv, sw_plots;
  SweepConfig sw;
  sweep->add_option("--dist", sw_dist, "synthetic distribution")->capture_default_str();
  sweep->add_option("--data", sw_data, "EMB1 rows instead of synthetic data");
  sweep->add_option("-d,--d", sw.data.d)->capture_default_str();
  sweep->add_option("--sizes", sw_sizes, "N values")->capture_default_str();
  sweep->add_option("--modes", sw_modes)->capture_default_str();
  sweep->add_option("--ks", sw_ks)->capture_default_str();
  sweep->add_option("--n-probes", sw_probes)->capture_default_str();
  sweep->add_option("--alphas", sw_alphas)->capture_default_str();
  sweep->add_option("--servers", sw_servers)->capture_default_str();
  sweep->add_option("--sigmas", sw_sigmas, "routing noise for ivf_leaky")->capture_default_str();
  sweep->add_option("--metric", sw_metric)->capture_default_str();
  sweep->add_option("--queries", sw.queries)->capture_default_str();
  sweep->add_option("--seed", sw.seed)->capture_default_str();
  sweep->add_option("--csv", sw_csv, "CSV output (default: stdout)");
  sweep->add_option("--plots", sw_plots, "write SVG charts with this prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*gen) {
    parse_distribution(gen_dist, gen_spec);
    std::vector<uint32_t> labels;
    const EmbeddingMatrix m = gen_synthetic(gen_spec, 0, &labels);
    write_embeddings(gen_out, m);
    if (!gen_payload_out.empty()) {
      // Row id and blob label, zero padded to the width.
      PayloadTable pay{m.rows, gen_payload_width, {}};
      pay.bytes.assign(size_t{m.rows} * gen_payload_width, 0);
      for (uint32_t i = 0; i < m.rows; ++i) {
        const std::string text = "row " + std::to_string(i) + " label " + std::to_string(labels[i]);
        std::copy_n(text.begin(), std::min<size_t>(text.size(), gen_payload_width),
                    pay.bytes.begin() + size_t{i} * gen_payload_width);
      }
      write_payloads(gen_payload_out, pay);
    }
    std::cerr << "wrote " << m.rows << "x" << m.cols << " " << distribution_string(gen_spec)
              << " to " << gen_out << "\n";
    return 0;
  }

  if (*build) {
    const Metric metric = parse_metric(build_metric);
    if (build_nc > 0) build_params.n_clusters = build_nc;
    const EmbeddingMatrix rows = prepare_rows(read_embeddings(build_data), metric);
    const PlainIvfIndex idx = kmeans_build(rows, metric, build_params);
    write_plain_index(build_out, idx);
    std::cerr << "n_c=" << idx.n_clusters << " m=" << idx.cluster_size
              << " iterations=" << idx.iterations_run << "\n";
    return 0;
  }

  if (*share) {
    const Metric metric = parse_metric(share_metric);
    const EmbeddingMatrix rows = prepare_rows(read_embeddings(share_data), metric);
    std::optional<PlainIvfIndex> idx;
    if (!share_index_path.empty()) {
      idx = read_plain_index(share_index_path);
      if (idx->metric != metric) throw UsageError("index was built for a different metric");
      if (idx->n_rows != rows.rows || idx->dim != rows.cols) {
        throw UsageError("index does not match the data file");
      }
    }
    std::optional<PayloadTable> pay;
    if (!share_payloads.empty()) pay = read_payloads(share_payloads);
    if (share_no_flat && !idx) throw UsageError("--no-flat needs --index");
    const ShareScheme scheme = ShareScheme::honest_majority(share_servers);
    Prg prg = Prg::from_entropy();
    const auto shards = share_index(idx ? &*idx : nullptr, rows, pay ? &*pay : nullptr, metric,
                                    scheme, FixedPointCodec{}, prg, {!share_no_flat, idx.has_value()});
    for (const auto& s : shards) write_shard(party_path(share_prefix, s.party, ".ivfs"), s);
    std::ofstream(share_prefix + ".json") << info_json(shards.front()).dump(2) << "\n";
    std::cerr << "wrote " << shards.size() << " shards to " << share_prefix << ".*.ivfs\n";
    return 0;
  }

  if (*dealer) {
    const PublicParams pp = read_public(dealer_public);
    const ShareScheme scheme = scheme_of(pp);
    const QueryConfig qc = dealer_q.config(pp.info.metric);
    FixedPointCodec codec;
    codec.frac_bits = pp.frac_bits;
    const auto plan = plan_query_material(pp.info, scheme, qc, codec);
    const uint64_t seed = dealer->count("--seed") ? dealer_seed : Prg::from_entropy().next_u64();
    Dealer gen_dealer(scheme, seed);
    std::vector<std::unique_ptr<PreprocWriter>> writers;
    for (int p = 0; p < scheme.n(); ++p) {
      writers.push_back(std::make_unique<PreprocWriter>(party_path(dealer_prefix, p, ".pre"),
                                                        static_cast<PartyId>(p), scheme));
    }
    for (uint32_t q = 0; q < dealer_queries; ++q) {
      for (const auto& req : plan) {
        const auto batches = gen_dealer.generate(req);
        for (int p = 0; p < scheme.n(); ++p) writers[p]->append(batches[p]);
      }
    }
    for (auto& w : writers) w->close();
    std::cerr << "material for " << dealer_queries << " " << mode_name(qc.mode) << " queries ("
              << plan.size() << " requests each)\n";
    return 0;
  }

  if (*serve) {
    const SharedIndex shard = read_shard(serve_shard);
    if (shard.party != serve_party) throw UsageError("shard belongs to another party");
    const auto peers = parse_peers(serve_peers);
    if (static_cast<int>(peers.size()) != shard.n_servers) {
      throw UsageError("--peers lists " + std::to_string(peers.size()) + " servers, shard expects " +
                       std::to_string(shard.n_servers));
    }
    const ShareScheme scheme(shard.n_servers, shard.threshold);
    FixedPointCodec codec;
    codec.frac_bits = shard.frac_bits;
    FilePreprocSource source(serve_pre, static_cast<PartyId>(serve_party), scheme);
    TcpTransport transport(static_cast<PartyId>(serve_party), peers);
    const auto client = static_cast<PartyId>(shard.n_servers);
    const std::chrono::milliseconds timeout(serve_timeout_ms);
    std::cerr << "party " << serve_party << " listening on port " << transport.listen_port() << "\n";
    for (uint32_t served = 0; serve_sessions == 0 || served < serve_sessions;) {
      auto env = transport.receive_any(MessageKind::kQueryHeader, std::chrono::seconds(1));
      if (!env) continue;
      if (env->sender != client) continue;
      Session session(transport, env->session_id, timeout);
      PartyContext ctx(scheme, codec, session, source);
      try {
        const auto start = std::chrono::steady_clock::now();
        const QueryHeader header = QueryHeader::decode(env->payload);
        serve_session(ctx, shard, client, header);
        std::cerr << "session " << env->session_id << " " << mode_name(header.mode) << " k="
                  << header.k << " rounds=" << session.stats().rounds
                  << " sent=" << session.stats().bytes_sent << "B "
                  << std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                         .count()
                  << "ms\n";
      } catch (const Error& e) {
        session.abort(e.what());
        // Material is consumed in lockstep; after a failure the servers no
        // longer agree on it.
        std::cerr << "session " << env->session_id << " failed: " << e.what() << "\n";
        return 2;
      }
      ++served;
    }
    return 0;
  }

  if (*query) {
    const PublicParams pp = read_public(query_public);
    const ShareScheme scheme = scheme_of(pp);
    const auto peers = parse_peers(query_peers);
    if (static_cast<int>(peers.size()) != pp.n_servers) throw UsageError("wrong number of peers");
    const QueryConfig qc = query_q.config(pp.info.metric);
    const EmbeddingMatrix qs = read_embeddings(query_file);
    if (query_rows.empty()) {
      for (uint32_t i = 0; i < qs.rows; ++i) query_rows.push_back(i);
    }
    FixedPointCodec codec;
    codec.frac_bits = pp.frac_bits;
    TcpTransport transport(static_cast<PartyId>(pp.n_servers), peers);
    Client client(scheme, codec, transport, pp.info, Prg::from_entropy().next_u64());
    Prg ids = Prg::from_entropy();
    json results = json::array();
    for (uint32_t row : query_rows) {
      if (row >= qs.rows) throw UsageError("query row " + std::to_string(row) + " out of range");
      const auto start = std::chrono::steady_clock::now();
      RetrievalResult r = client.query(ids.next_u64(), qs.row(row), qc,
                                       std::chrono::milliseconds(query_timeout_ms));
      r.stats.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      json payloads = json::array();
      for (const auto& p : r.payloads) payloads.push_back(hex(p));
      results.push_back({{"row", row},
                         {"indices", r.indices},
                         {"payloads_hex", payloads},
                         {"stats", stats_json(r.stats)}});
    }
    const json doc = {{"mode", mode_name(qc.mode)}, {"k", qc.k}, {"n_probe", qc.n_probe},
                      {"results", results}};
    if (query_out.empty()) {
      std::cout << doc.dump(2) << "\n";
    } else {
      std::ofstream(query_out) << doc.dump(2) << "\n";
    }
    return 0;
  }

  if (*sweep) {
    parse_distribution(sw_dist, sw.data);
    if (!sw_data.empty()) sw.rows = read_embeddings(sw_data);
    sw.sizes = parse_list<uint32_t>(sw_sizes, "--sizes");
    sw.modes.clear();
    for (const auto& m : parse_list<std::string>(sw_modes, "--modes")) sw.modes.push_back(parse_mode(m));
    sw.ks = parse_list<uint32_t>(sw_ks, "--ks");
    sw.n_probes = parse_list<uint32_t>(sw_probes, "--n-probes");
    sw.alphas = parse_list<double>(sw_alphas, "--alphas");
    sw.n_servers = parse_list<int>(sw_servers, "--servers");
    sw.noise_sigmas = parse_list<double>(sw_sigmas, "--sigmas");
    sw.metric = parse_metric(sw_metric);
    std::ofstream file;
    if (!sw_csv.empty()) {
      file.open(sw_csv);
      if (!file) throw FormatError("cannot open " + sw_csv);
    }
    std::ostream& os = sw_csv.empty() ? std::cout : file;
    os << csv_header() << "\n" << std::flush;
    const auto records = run_sweep(sw, [&](const BenchRecord& r) { os << csv_row(r) << "\n" << std::flush; });
    if (!sw_plots.empty()) write_sweep_plots(sw_plots, records);
    return 0;
  }
  return 1;
}

}  // namespace
}  // namespace vecmpc

int main(int argc, char** argv) {
  try {
    return vecmpc::run(argc, argv);
  } catch (const vecmpc::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const vecmpc::ParameterError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
