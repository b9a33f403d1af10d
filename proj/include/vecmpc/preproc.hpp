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
#include <deque>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vecmpc/field.hpp"
#include "vecmpc/random.hpp"
#include "vecmpc/shamir.hpp"

namespace vecmpc {

// Correlated randomness produced offline by the trusted dealer.
//
//   kDoubleSharing  ([r]^(t), [r]^(2t)) for uniform r.
//   kTruncMask      ([r]^(a), [r >> b]^(t)) with r uniform below 2^c.
//   kCompareMask    a shared bits [r_0..r_{a-1}] and [r]^(t), where
//                   r = r'' * 2^a + sum r_i 2^i is uniform below 2^b.
//   kPermutation    a shared a x a permutation matrix.
enum class MaterialKind : uint16_t {
  kDoubleSharing = 1,
  kTruncMask = 2,
  kCompareMask = 3,
  kPermutation = 4,
};

struct MaterialRequest {
  MaterialKind kind = MaterialKind::kDoubleSharing;
  uint32_t count = 0;
  uint32_t a = 0;
  uint32_t b = 0;
  uint32_t c = 0;

  friend bool operator==(const MaterialRequest&, const MaterialRequest&) = default;
  // Elements one party holds for this request.
  size_t elements_per_party() const;
  std::string describe() const;
};

// One party's slice of a request.
//   kDoubleSharing: [r_t x count][r_2t x count]
//   kTruncMask:     [r x count][r_hi x count]
//   kCompareMask:   [bits x count*a][r x count]
//   kPermutation:   [count matrices of a*a, row-major]
struct MaterialBatch {
  MaterialRequest request;
  std::vector<Fp> data;
};

class PreprocSource {
 public:
  virtual ~PreprocSource() = default;
  // Throws MaterialError when the material is exhausted or does not match.
  virtual MaterialBatch take(const MaterialRequest& request) = 0;
};

// Generates all parties' slices of a request. Deterministic under seed.
class Dealer {
 public:
  Dealer(ShareScheme scheme, uint64_t seed);
  std::vector<MaterialBatch> generate(const MaterialRequest& request);
  const ShareScheme& scheme() const { return scheme_; }

 private:
  ShareScheme scheme_;
  Prg prg_;
};

// Lazily runs a Dealer on behalf of in-process parties. The j-th request of
// every party is served from the same generated batch, so all parties must
// issue the same request sequence. Thread-safe.
class SharedDealer {
 public:
  using Sink = std::function<void(const std::vector<MaterialBatch>&)>;

  SharedDealer(ShareScheme scheme, uint64_t seed);

  MaterialBatch take(PartyId party, const MaterialRequest& request);
  std::unique_ptr<PreprocSource> source_for(PartyId party);
  // Called with every freshly generated request (all parties' slices).
  void set_sink(Sink sink);

  // Time spent generating material so far.
  double generation_seconds() const;
  uint64_t requests_served() const;

 private:
  struct Pending {
    MaterialRequest request;
    std::vector<MaterialBatch> batches;
    int remaining;
  };

  mutable std::mutex mu_;
  Dealer dealer_;
  std::deque<Pending> pending_;
  uint64_t base_index_ = 0;
  std::vector<uint64_t> next_index_;
  Sink sink_;
  double generation_seconds_ = 0;
  uint64_t served_ = 0;
};

// Per-party material file:
//   magic "PRE1", u32 version, u16 party, u16 n, u16 t, u16 reserved,
//   u64 batch_count, then per batch: u16 kind, u16 reserved, u32 count,
//   u32 a, u32 b, u32 c, u64 element_count, element_count x 8-byte elements.
class PreprocWriter {
 public:
  PreprocWriter(const std::string& path, PartyId party, const ShareScheme& scheme);
  void append(const MaterialBatch& batch);
  // Patches the batch count into the header.
  void close();
  ~PreprocWriter();

 private:
  std::ofstream out_;
  uint64_t batches_ = 0;
  bool closed_ = false;
};

class FilePreprocSource : public PreprocSource {
 public:
  FilePreprocSource(const std::string& path, PartyId party, const ShareScheme& scheme);
  MaterialBatch take(const MaterialRequest& request) override;
  uint64_t remaining_batches() const { return remaining_; }

 private:
  std::ifstream in_;
  uint64_t remaining_ = 0;
};

}  // namespace vecmpc
