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

#include "vecmpc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "vecmpc/oracle.hpp"

namespace vecmpc {

void parse_distribution(const std::string& text, SyntheticSpec& spec) {
  static const std::regex two(R"(\s*(gauss|normal|uniform|blobs)\s*\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)\s*)");
  std::smatch m;
  if (std::regex_match(text, m, two)) {
    const std::string name = m[1];
    spec.a = std::stod(m[2]);
    spec.b = std::stod(m[3]);
    if (name == "uniform") {
      spec.distribution = Distribution::kUniform;
      if (!(spec.a < spec.b)) throw ParameterError("uniform(a,b) needs a < b");
    } else if (name == "blobs") {
      spec.distribution = Distribution::kBlobs;
      if (spec.a < 1 || spec.a != std::floor(spec.a)) throw ParameterError("blob count must be a positive integer");
      if (spec.b < 0) throw ParameterError("blob spread must be non-negative");
    } else {
      spec.distribution = Distribution::kGauss;
      if (spec.b < 0) throw ParameterError("gauss sigma must be non-negative");
    }
    return;
  }
  if (text == "binary") {
    spec.distribution = Distribution::kBinary;
    return;
  }
  throw ParameterError("unknown distribution '" + text +
                       "' (gauss(mu,sigma), uniform(a,b), binary, blobs(count,spread))");
}

std::string distribution_string(const SyntheticSpec& spec) {
  std::ostringstream os;
  switch (spec.distribution) {
    case Distribution::kGauss: os << "gauss(" << spec.a << "," << spec.b << ")"; break;
    case Distribution::kUniform: os << "uniform(" << spec.a << "," << spec.b << ")"; break;
    case Distribution::kBinary: os << "binary"; break;
    case Distribution::kBlobs: os << "blobs(" << spec.a << "," << spec.b << ")"; break;
  }
  return os.str();
}

EmbeddingMatrix gen_synthetic(const SyntheticSpec& spec, uint64_t stream,
                              std::vector<uint32_t>* labels) {
  if (spec.d == 0) throw ParameterError("d must be positive");
  EmbeddingMatrix out(spec.n, spec.d);
  std::seed_seq seq{spec.seed, stream, uint64_t{0x73796e74}};
  std::mt19937_64 rng(seq);
  if (labels) labels->assign(spec.n, 0);
  switch (spec.distribution) {
    case Distribution::kGauss: {
      std::normal_distribution<double> g(spec.a, spec.b);
      for (float& v : out.data) v = static_cast<float>(g(rng));
      break;
    }
    case Distribution::kUniform: {
      std::uniform_real_distribution<double> u(spec.a, spec.b);
      for (float& v : out.data) v = static_cast<float>(u(rng));
      break;
    }
    case Distribution::kBinary: {
      std::bernoulli_distribution coin(0.5);
      for (float& v : out.data) v = coin(rng) ? 1.0f : -1.0f;
      break;
    }
    case Distribution::kBlobs: {
      const auto blobs = static_cast<uint32_t>(spec.a);
      // Centers on the unit sphere, drawn from the seed alone.
      std::mt19937_64 crng(spec.seed ^ 0x626c6f62ULL);
      std::normal_distribution<double> unit(0.0, 1.0);
      EmbeddingMatrix centers(blobs, spec.d);
      for (float& v : centers.data) v = static_cast<float>(unit(crng));
      for (uint32_t c = 0; c < blobs; ++c) normalize_in_place(centers.row(c));
      std::uniform_int_distribution<uint32_t> pick(0, blobs - 1);
      std::normal_distribution<double> noise(0.0, spec.b);
      for (uint32_t i = 0; i < spec.n; ++i) {
        const uint32_t c = pick(rng);
        if (labels) (*labels)[i] = c;
        auto row = out.row(i);
        const auto center = centers.row(c);
        for (uint32_t j = 0; j < spec.d; ++j) row[j] = static_cast<float>(center[j] + noise(rng));
      }
      break;
    }
  }
  if (spec.normalize) out = normalized_rows(out);
  return out;
}

RetrievalMetrics eval_retrieval(const std::vector<uint32_t>& result,
                                const std::vector<uint32_t>& truth) {
  if (truth.empty()) throw ParameterError("empty ground truth");
  if (result.size() > truth.size()) {
    throw ParameterError("result has " + std::to_string(result.size()) + " entries, truth has " +
                         std::to_string(truth.size()));
  }
  const std::set<uint32_t> want(truth.begin(), truth.end());
  size_t hits = 0;
  for (uint32_t r : std::set<uint32_t>(result.begin(), result.end())) hits += want.count(r);
  RetrievalMetrics m;
  m.recall = static_cast<double>(hits) / static_cast<double>(want.size());
  m.precision = static_cast<double>(hits) / static_cast<double>(truth.size());
  m.f1 = m.recall + m.precision > 0 ? 2 * m.recall * m.precision / (m.recall + m.precision) : 0;
  return m;
}

std::string csv_header() {
  return "mode,metric,N,d,k,n_c,n_probe,recall,precision,f1,wall_ms,bytes_per_server,"
         "client_bytes,rounds,n_servers,noise_sigma,plain_ms";
}

std::string csv_row(const BenchRecord& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.mode << ',' << r.metric << ',' << r.n << ',' << r.d << ',' << r.k << ',' << r.n_c << ','
     << r.n_probe << ',' << r.recall << ',' << r.precision << ',' << r.f1 << ',' << r.wall_ms << ','
     << r.bytes_per_server << ',' << r.client_bytes << ',' << r.rounds << ',' << r.n_servers << ','
     << r.noise_sigma << ',' << r.plain_ms;
  return os.str();
}

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

EmbeddingMatrix make_queries(const SweepConfig& config, const EmbeddingMatrix& rows) {
  if (!config.rows) {
    SyntheticSpec spec = config.data;
    spec.n = config.queries;
    return gen_synthetic(spec, 1);
  }
  // Perturbed database rows.
  std::mt19937_64 rng(config.seed ^ 0x71756572ULL);
  std::uniform_int_distribution<uint32_t> pick(0, rows.rows - 1);
  EmbeddingMatrix q(config.queries, rows.cols);
  for (uint32_t i = 0; i < config.queries; ++i) {
    const auto src = rows.row(pick(rng));
    double ss = 0;
    for (float v : src) ss += double{v} * v;
    std::normal_distribution<double> noise(0.0, config.query_jitter * std::sqrt(ss / rows.cols));
    auto dst = q.row(i);
    for (uint32_t j = 0; j < rows.cols; ++j) dst[j] = static_cast<float>(src[j] + noise(rng));
  }
  return q;
}

struct Accumulator {
  double recall = 0, precision = 0, f1 = 0, wall = 0, server_bytes = 0, client_bytes = 0,
         rounds = 0;
  uint32_t count = 0;

  void add(const RetrievalMetrics& m, const RetrievalResult& r) {
    recall += m.recall;
    precision += m.precision;
    f1 += m.f1;
    wall += r.stats.wall_ms;
    double bytes = 0;
    for (const auto& s : r.stats.servers) bytes += static_cast<double>(s.bytes_sent);
    server_bytes += bytes / static_cast<double>(r.stats.servers.size());
    client_bytes += static_cast<double>(r.stats.client.bytes_sent);
    rounds += r.stats.rounds;
    ++count;
  }

  void fill(BenchRecord& rec) const {
    const double c = count;
    rec.recall = recall / c;
    rec.precision = precision / c;
    rec.f1 = f1 / c;
    rec.wall_ms = wall / c;
    rec.bytes_per_server = server_bytes / c;
    rec.client_bytes = client_bytes / c;
    rec.rounds = rounds / c;
  }
};

}  // namespace

std::vector<BenchRecord> run_sweep(const SweepConfig& config,
                                   const std::function<void(const BenchRecord&)>& on_record) {
  if (config.queries == 0) throw ParameterError("sweep needs at least one query");
  const bool want_exact = std::count(config.modes.begin(), config.modes.end(), QueryMode::kExact) > 0;
  const bool want_ivf = std::any_of(config.modes.begin(), config.modes.end(),
                                    [](QueryMode m) { return m != QueryMode::kExact; });
  const FixedPointCodec codec;
  std::vector<BenchRecord> out;
  auto emit = [&](BenchRecord rec) {
    if (on_record) on_record(rec);
    out.push_back(std::move(rec));
  };

  for (uint32_t n : config.sizes) {
    EmbeddingMatrix raw;
    if (config.rows) {
      if (n > config.rows->rows) {
        throw ParameterError("N=" + std::to_string(n) + " exceeds the " +
                             std::to_string(config.rows->rows) + " supplied rows");
      }
      raw = EmbeddingMatrix(n, config.rows->cols);
      std::copy_n(config.rows->data.begin(), size_t{n} * config.rows->cols, raw.data.begin());
    } else {
      SyntheticSpec spec = config.data;
      spec.n = n;
      raw = gen_synthetic(spec, 0);
    }
    const EmbeddingMatrix rows = prepare_rows(raw, config.metric);
    const EmbeddingMatrix queries = prepare_rows(make_queries(config, rows), config.metric);

    // Plaintext ground truth and timing per k.
    std::map<uint32_t, std::vector<std::vector<uint32_t>>> truth;
    std::map<uint32_t, double> plain_exact_ms;
    for (uint32_t k : config.ks) {
      const auto start = std::chrono::steady_clock::now();
      for (uint32_t qi = 0; qi < queries.rows; ++qi) {
        truth[k].push_back(plain_exact_topk(config.metric, queries.row(qi), rows, k));
      }
      plain_exact_ms[k] = ms_since(start) / queries.rows;
    }

    for (int servers : config.n_servers) {
      const ShareScheme scheme = ShareScheme::honest_majority(servers);
      auto base = [&](QueryMode mode, uint32_t k) {
        BenchRecord rec;
        rec.mode = mode_name(mode);
        rec.metric = metric_name(config.metric);
        rec.n = n;
        rec.d = rows.cols;
        rec.k = k;
        rec.n_servers = static_cast<uint32_t>(servers);
        return rec;
      };
      LocalDeployment::Options opts;
      opts.dealer_seed = config.seed + 17;
      opts.client_seed = config.seed + 29;

      if (want_exact) {
        Prg prg(config.seed, 0x7368617265ULL);
        LocalDeployment dep(share_index(nullptr, rows, nullptr, config.metric, scheme, codec, prg,
                                        {true, false}),
                            opts);
        for (uint32_t k : config.ks) {
          if (k > n) continue;
          Accumulator acc;
          for (uint32_t qi = 0; qi < queries.rows; ++qi) {
            QueryConfig qc;
            qc.metric = config.metric;
            qc.k = k;
            qc.mode = QueryMode::kExact;
            const RetrievalResult r = dep.query(queries.row(qi), qc);
            acc.add(eval_retrieval(r.indices, truth[k][qi]), r);
          }
          BenchRecord rec = base(QueryMode::kExact, k);
          acc.fill(rec);
          rec.plain_ms = plain_exact_ms[k];
          emit(rec);
        }
      }
      if (!want_ivf) continue;

      for (double alpha : config.alphas) {
        IvfParams params;
        params.alpha = alpha;
        params.seed = config.seed;
        const PlainIvfIndex index = kmeans_build(rows, config.metric, params);
        Prg prg(config.seed, 0x7368617265ULL);
        LocalDeployment dep(share_index(&index, rows, nullptr, config.metric, scheme, codec, prg,
                                        {false, true}),
                            opts);
        for (QueryMode mode : config.modes) {
          if (mode == QueryMode::kExact) continue;
          for (uint32_t k : config.ks) {
            for (uint32_t n_probe : config.n_probes) {
              if (n_probe > index.n_clusters || k > n_probe * index.cluster_size) continue;
              const std::vector<double> sigmas =
                  mode == QueryMode::kIvfLeaky ? config.noise_sigmas : std::vector<double>{0.0};
              for (double sigma : sigmas) {
                Accumulator acc;
                double plain_ms = 0;
                for (uint32_t qi = 0; qi < queries.rows; ++qi) {
                  QueryConfig qc;
                  qc.metric = config.metric;
                  qc.k = k;
                  qc.n_probe = n_probe;
                  qc.mode = mode;
                  qc.noise_sigma = sigma;
                  qc.noise_seed = config.seed * 1000003 + qi;
                  const auto start = std::chrono::steady_clock::now();
                  plain_ivf_search(index, rows, queries.row(qi), k, n_probe, codec);
                  plain_ms += ms_since(start);
                  const RetrievalResult r = dep.query(queries.row(qi), qc);
                  acc.add(eval_retrieval(r.indices, truth[k][qi]), r);
                }
                BenchRecord rec = base(mode, k);
                rec.n_c = index.n_clusters;
                rec.n_probe = n_probe;
                rec.noise_sigma = sigma;
                acc.fill(rec);
                rec.plain_ms = plain_ms / queries.rows;
                emit(rec);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<PlotSeries>& series, bool log_x) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  for (const auto& s : series) {
    for (size_t i = 0; i < s.xs.size(); ++i) {
      x0 = std::min(x0, tx(s.xs[i]));
      x1 = std::max(x1, tx(s.xs[i]));
      y0 = std::min(y0, s.ys[i]);
      y1 = std::max(y1, s.ys[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4, fy = y0 + (y1 - y0) * i / 4;
    const double gx = kLeft + pw * i / 4, gy = kTop + ph - ph * i / 4;
    std::ostringstream lx, ly;
    lx.precision(3);
    ly.precision(3);
    lx << (log_x ? std::pow(10, fx) : fx);
    ly << fy;
    os << "<text x=\"" << gx << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
       << lx.str() << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">" << ly.str()
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
     << xml_escape(xlabel) << "</text>\n";
  os << "<text transform=\"translate(16," << kTop + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(ylabel) << "</text>\n";
  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < series[s].xs.size(); ++i) {
      os << px(series[s].xs[i]) << ',' << py(series[s].ys[i]) << ' ';
    }
    os << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    os << "<line x1=\"" << kW - kRight + 10 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 30
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kW - kRight + 36 << "\" y=\"" << ly + 4 << "\">"
       << xml_escape(series[s].name) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_sweep_plots(const std::string& prefix, const std::vector<BenchRecord>& records) {
  // Recall and time vs n_probe, one series per (mode, N, n_c, k).
  std::map<std::string, PlotSeries> recall, time;
  std::map<std::string, PlotSeries> by_n;
  for (const auto& r : records) {
    if (r.mode != "exact" && r.noise_sigma == 0) {
      const std::string key = r.mode + " N=" + std::to_string(r.n) + " nc=" + std::to_string(r.n_c) +
                              " k=" + std::to_string(r.k);
      for (auto* m : {&recall, &time}) (*m)[key].name = key;
      recall[key].xs.push_back(r.n_probe);
      recall[key].ys.push_back(r.recall);
      time[key].xs.push_back(r.n_probe);
      time[key].ys.push_back(r.wall_ms);
    }
    const std::string nkey = r.mode + (r.mode == "exact" ? "" : " np=" + std::to_string(r.n_probe)) +
                             " k=" + std::to_string(r.k) + " n=" + std::to_string(r.n_servers);
    by_n[nkey].name = nkey;
    by_n[nkey].xs.push_back(r.n);
    by_n[nkey].ys.push_back(r.wall_ms);
  }
  auto values = [](const std::map<std::string, PlotSeries>& m) {
    std::vector<PlotSeries> v;
    for (const auto& [_, s] : m) v.push_back(s);
    return v;
  };
  if (!recall.empty()) {
    write_svg_chart(prefix + "_recall_vs_nprobe.svg", "recall vs n_probe", "n_probe", "recall",
                    values(recall));
    write_svg_chart(prefix + "_time_vs_nprobe.svg", "query time vs n_probe", "n_probe", "ms",
                    values(time));
  }
  // Keep only series that span more than one N.
  std::vector<PlotSeries> spans;
  for (const auto& [_, s] : by_n) {
    if (s.xs.size() > 1) spans.push_back(s);
  }
  if (!spans.empty()) {
    write_svg_chart(prefix + "_time_vs_n.svg", "query time vs N", "N", "ms", spans, true);
  }
}

}  // namespace vecmpc
