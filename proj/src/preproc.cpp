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

#include "vecmpc/preproc.hpp"

#include <chrono>
#include <numeric>
#include <sstream>

namespace vecmpc {

size_t MaterialRequest::elements_per_party() const {
  switch (kind) {
    case MaterialKind::kDoubleSharing:
    case MaterialKind::kTruncMask:
      return 2 * static_cast<size_t>(count);
    case MaterialKind::kCompareMask:
      return static_cast<size_t>(count) * (a + 1);
    case MaterialKind::kPermutation:
      return static_cast<size_t>(count) * a * a;
  }
  return 0;
}

std::string MaterialRequest::describe() const {
  std::ostringstream os;
  os << "kind=" << static_cast<int>(kind) << " count=" << count << " a=" << a << " b=" << b
     << " c=" << c;
  return os.str();
}

Dealer::Dealer(ShareScheme scheme, uint64_t seed)
    : scheme_(std::move(scheme)), prg_(seed, /*stream=*/0x6465616c6572ULL) {}

std::vector<MaterialBatch> Dealer::generate(const MaterialRequest& req) {
  const int n = scheme_.n();
  const int t = scheme_.t();
  const size_t count = req.count;
  std::vector<std::vector<Fp>> data(n, std::vector<Fp>(req.elements_per_party()));

  switch (req.kind) {
    case MaterialKind::kDoubleSharing:
      for (size_t i = 0; i < count; ++i) {
        const Fp r = prg_.next_field();
        share_into(r, t, scheme_, prg_, data, i);
        share_into(r, 2 * t, scheme_, prg_, data, count + i);
      }
      break;
    case MaterialKind::kTruncMask: {
      const int degree = static_cast<int>(req.a);
      const int shift = static_cast<int>(req.b);
      const int total = static_cast<int>(req.c);
      if (degree < 0 || degree >= n || shift < 0 || total <= shift || total > 60) {
        throw MaterialError("invalid truncation mask request " + req.describe());
      }
      for (size_t i = 0; i < count; ++i) {
        const uint64_t hi = prg_.next_bits(total - shift);
        const uint64_t lo = prg_.next_bits(shift);
        const uint64_t r = (hi << shift) | lo;
        share_into(Fp(r), degree, scheme_, prg_, data, i);
        share_into(Fp(hi), t, scheme_, prg_, data, count + i);
      }
      break;
    }
    case MaterialKind::kCompareMask: {
      const int bits = static_cast<int>(req.a);
      const int total = static_cast<int>(req.b);
      if (bits < 1 || total < bits || total > 60) {
        throw MaterialError("invalid comparison mask request " + req.describe());
      }
      const size_t bit_base = 0;
      const size_t full_base = count * bits;
      for (size_t i = 0; i < count; ++i) {
        const uint64_t low = prg_.next_bits(bits);
        for (int b = 0; b < bits; ++b) {
          share_into(Fp((low >> b) & 1), t, scheme_, prg_, data, bit_base + i * bits + b);
        }
        const uint64_t high = prg_.next_bits(total - bits);
        share_into(Fp((high << bits) | low), t, scheme_, prg_, data, full_base + i);
      }
      break;
    }
    case MaterialKind::kPermutation: {
      const size_t size = req.a;
      std::vector<size_t> perm(size);
      for (size_t m = 0; m < count; ++m) {
        std::iota(perm.begin(), perm.end(), size_t{0});
        for (size_t i = size; i > 1; --i) std::swap(perm[i - 1], perm[prg_.next_below(i)]);
        // Row i selects input perm[i].
        const size_t base = m * size * size;
        for (size_t i = 0; i < size; ++i) {
          for (size_t j = 0; j < size; ++j) {
            share_into(Fp(perm[i] == j ? 1 : 0), t, scheme_, prg_, data, base + i * size + j);
          }
        }
      }
      break;
    }
    default:
      throw MaterialError("unknown material kind " + req.describe());
  }

  std::vector<MaterialBatch> out(n);
  for (int p = 0; p < n; ++p) out[p] = MaterialBatch{req, std::move(data[p])};
  return out;
}

SharedDealer::SharedDealer(ShareScheme scheme, uint64_t seed)
    : dealer_(scheme, seed), next_index_(scheme.n(), 0) {}

void SharedDealer::set_sink(Sink sink) {
  std::lock_guard lock(mu_);
  sink_ = std::move(sink);
}

MaterialBatch SharedDealer::take(PartyId party, const MaterialRequest& request) {
  std::lock_guard lock(mu_);
  if (party >= next_index_.size()) throw MaterialError("unknown party for dealer");
  const uint64_t index = next_index_[party]++;
  if (index < base_index_) throw MaterialError("dealer request index went backwards");
  while (index >= base_index_ + pending_.size()) {
    const auto start = std::chrono::steady_clock::now();
    Pending p{request, dealer_.generate(request), dealer_.scheme().n()};
    generation_seconds_ +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (sink_) sink_(p.batches);
    pending_.push_back(std::move(p));
  }
  Pending& entry = pending_[index - base_index_];
  if (!(entry.request == request)) {
    throw MaterialError("parties diverged on preprocessing: expected " +
                        entry.request.describe() + ", got " + request.describe());
  }
  MaterialBatch out = std::move(entry.batches[party]);
  --entry.remaining;
  ++served_;
  while (!pending_.empty() && pending_.front().remaining == 0) {
    pending_.pop_front();
    ++base_index_;
  }
  return out;
}

namespace {

class SharedDealerSource : public PreprocSource {
 public:
  SharedDealerSource(SharedDealer& dealer, PartyId party) : dealer_(dealer), party_(party) {}
  MaterialBatch take(const MaterialRequest& request) override {
    return dealer_.take(party_, request);
  }

 private:
  SharedDealer& dealer_;
  PartyId party_;
};

constexpr char kPreprocMagic[4] = {'P', 'R', 'E', '1'};
constexpr uint32_t kPreprocVersion = 1;

void write_bytes(std::ofstream& out, const std::vector<uint8_t>& bytes) {
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<uint8_t> read_bytes(std::ifstream& in, size_t n) {
  std::vector<uint8_t> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) throw MaterialError("truncated material file");
  return buf;
}

}  // namespace

std::unique_ptr<PreprocSource> SharedDealer::source_for(PartyId party) {
  return std::make_unique<SharedDealerSource>(*this, party);
}

double SharedDealer::generation_seconds() const {
  std::lock_guard lock(mu_);
  return generation_seconds_;
}

uint64_t SharedDealer::requests_served() const {
  std::lock_guard lock(mu_);
  return served_;
}

PreprocWriter::PreprocWriter(const std::string& path, PartyId party, const ShareScheme& scheme)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw MaterialError("cannot open " + path + " for writing");
  std::vector<uint8_t> header(kPreprocMagic, kPreprocMagic + 4);
  put_u32(header, kPreprocVersion);
  put_u16(header, party);
  put_u16(header, static_cast<uint16_t>(scheme.n()));
  put_u16(header, static_cast<uint16_t>(scheme.t()));
  put_u16(header, 0);
  put_u64(header, 0);
  write_bytes(out_, header);
}

void PreprocWriter::append(const MaterialBatch& batch) {
  std::vector<uint8_t> head;
  put_u16(head, static_cast<uint16_t>(batch.request.kind));
  put_u16(head, 0);
  put_u32(head, batch.request.count);
  put_u32(head, batch.request.a);
  put_u32(head, batch.request.b);
  put_u32(head, batch.request.c);
  put_u64(head, batch.data.size());
  write_bytes(out_, head);
  write_bytes(out_, pack_elements(batch.data));
  ++batches_;
}

void PreprocWriter::close() {
  if (closed_) return;
  std::vector<uint8_t> count;
  put_u64(count, batches_);
  out_.seekp(16);
  write_bytes(out_, count);
  out_.close();
  closed_ = true;
}

PreprocWriter::~PreprocWriter() {
  try {
    close();
  } catch (...) {
  }
}

FilePreprocSource::FilePreprocSource(const std::string& path, PartyId party,
                                     const ShareScheme& scheme)
    : in_(path, std::ios::binary) {
  if (!in_) throw MaterialError("cannot open material file " + path);
  const auto header = read_bytes(in_, 24);
  if (!std::equal(kPreprocMagic, kPreprocMagic + 4, header.begin())) {
    throw MaterialError(path + ": not a material file");
  }
  if (get_u32(&header[4]) != kPreprocVersion) throw MaterialError(path + ": unsupported version");
  if (get_u16(&header[8]) != party) throw MaterialError(path + ": material belongs to another party");
  if (get_u16(&header[10]) != scheme.n() || get_u16(&header[12]) != scheme.t()) {
    throw MaterialError(path + ": scheme mismatch");
  }
  remaining_ = get_u64(&header[16]);
}

MaterialBatch FilePreprocSource::take(const MaterialRequest& request) {
  if (remaining_ == 0) throw MaterialError("preprocessing material exhausted");
  const auto head = read_bytes(in_, 28);
  MaterialBatch batch;
  batch.request.kind = static_cast<MaterialKind>(get_u16(&head[0]));
  batch.request.count = get_u32(&head[4]);
  batch.request.a = get_u32(&head[8]);
  batch.request.b = get_u32(&head[12]);
  batch.request.c = get_u32(&head[16]);
  const uint64_t elements = get_u64(&head[20]);
  if (!(batch.request == request)) {
    throw MaterialError("material file out of step: expected " + request.describe() +
                        ", file has " + batch.request.describe());
  }
  if (elements != request.elements_per_party()) throw MaterialError("material batch size mismatch");
  try {
    batch.data = unpack_elements(read_bytes(in_, elements * kElementBytes));
  } catch (const FormatError& e) {
    throw MaterialError(std::string("corrupt material: ") + e.what());
  }
  --remaining_;
  return batch;
}

}  // namespace vecmpc
