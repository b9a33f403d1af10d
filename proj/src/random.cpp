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

#include "vecmpc/random.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace vecmpc {

namespace {

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

constexpr std::array<uint8_t, 4096> kZeros{};

}  // namespace

Prg::Prg(uint64_t seed, uint64_t stream) {
  ensure_sodium();
  uint8_t material[16];
  for (int i = 0; i < 8; ++i) {
    material[i] = static_cast<uint8_t>(seed >> (8 * i));
    material[8 + i] = static_cast<uint8_t>(stream >> (8 * i));
  }
  crypto_generichash(key_.data(), key_.size(), material, sizeof(material), nullptr, 0);
}

Prg Prg::from_entropy() {
  ensure_sodium();
  uint64_t seed = 0;
  uint64_t stream = 0;
  randombytes_buf(&seed, sizeof(seed));
  randombytes_buf(&stream, sizeof(stream));
  return Prg(seed, stream);
}

void Prg::refill() {
  crypto_stream_chacha20_xor_ic(buffer_.data(), kZeros.data(), buffer_.size(), nonce_.data(),
                                block_counter_, key_.data());
  block_counter_ += buffer_.size() / 64;
  pos_ = 0;
}

uint64_t Prg::next_u64() {
  if (pos_ + 8 > buffer_.size()) refill();
  uint64_t v;
  std::memcpy(&v, buffer_.data() + pos_, sizeof(v));
  pos_ += 8;
  return v;
}

uint64_t Prg::next_bits(int bits) {
  if (bits <= 0) return 0;
  const uint64_t v = next_u64();
  return bits >= 64 ? v : (v & ((uint64_t{1} << bits) - 1));
}

uint64_t Prg::next_below(uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection on the top of the range keeps the draw unbiased.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    const uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

Fp Prg::next_field() {
  for (;;) {
    const uint64_t v = next_u64() & Fp::kModulus;
    if (v != Fp::kModulus) return Fp::raw(v);
  }
}

void Prg::fill_field(std::span<Fp> out) {
  for (Fp& v : out) v = next_field();
}

double Prg::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace vecmpc
