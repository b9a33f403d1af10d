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

#include <array>
#include <cstdint>
#include <span>

#include "vecmpc/field.hpp"

namespace vecmpc {

// ChaCha20 keystream generator. Deterministic for a given (seed, stream).
class Prg {
 public:
  Prg(uint64_t seed, uint64_t stream);
  explicit Prg(uint64_t seed) : Prg(seed, 0) {}
  // Seeded from the operating system.
  static Prg from_entropy();

  uint64_t next_u64();
  // Uniform in [0, 2^bits), bits <= 64.
  uint64_t next_bits(int bits);
  // Uniform in [0, bound).
  uint64_t next_below(uint64_t bound);
  Fp next_field();
  void fill_field(std::span<Fp> out);
  // Uniform double in [0, 1).
  double next_unit();

 private:
  void refill();

  std::array<uint8_t, 32> key_{};
  std::array<uint8_t, 8> nonce_{};
  uint64_t block_counter_ = 0;
  std::array<uint8_t, 4096> buffer_{};
  size_t pos_ = sizeof(buffer_);
};

}  // namespace vecmpc
