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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vecmpc/errors.hpp"

namespace vecmpc {

// Elements of F_p with p = 2^61 - 1.
class Fp {
 public:
  static constexpr uint64_t kModulus = (uint64_t{1} << 61) - 1;
  static constexpr int kBits = 61;

  constexpr Fp() = default;
  // Reduces any 64-bit input.
  constexpr explicit Fp(uint64_t v) : v_(reduce64(v)) {}

  static constexpr Fp from_signed(int64_t v) {
    return v >= 0 ? Fp(static_cast<uint64_t>(v))
                  : -Fp(static_cast<uint64_t>(-(v + 1)) + 1);
  }

  constexpr uint64_t value() const { return v_; }

  // Lifts to (-p/2, p/2].
  constexpr int64_t to_signed() const {
    return v_ > kModulus / 2 ? -static_cast<int64_t>(kModulus - v_)
                             : static_cast<int64_t>(v_);
  }

  friend constexpr Fp operator+(Fp a, Fp b) {
    uint64_t s = a.v_ + b.v_;
    if (s >= kModulus) s -= kModulus;
    return raw(s);
  }
  friend constexpr Fp operator-(Fp a, Fp b) {
    return raw(a.v_ >= b.v_ ? a.v_ - b.v_ : a.v_ + kModulus - b.v_);
  }
  friend constexpr Fp operator-(Fp a) { return raw(a.v_ == 0 ? 0 : kModulus - a.v_); }
  friend constexpr Fp operator*(Fp a, Fp b) {
    return raw(reduce128(static_cast<unsigned __int128>(a.v_) * b.v_));
  }
  constexpr Fp& operator+=(Fp o) { return *this = *this + o; }
  constexpr Fp& operator-=(Fp o) { return *this = *this - o; }
  constexpr Fp& operator*=(Fp o) { return *this = *this * o; }
  friend constexpr bool operator==(Fp a, Fp b) = default;

  Fp pow(uint64_t e) const;
  // Throws ParameterError for zero.
  Fp inverse() const;

  static constexpr Fp raw(uint64_t v) {
    Fp f;
    f.v_ = v;
    return f;
  }

  static constexpr uint64_t reduce64(uint64_t v) {
    v = (v & kModulus) + (v >> 61);
    return v >= kModulus ? v - kModulus : v;
  }
  static constexpr uint64_t reduce128(unsigned __int128 x) {
    unsigned __int128 hi = x >> 61;
    uint64_t s = (static_cast<uint64_t>(x) & kModulus) +
                 (static_cast<uint64_t>(hi) & kModulus) +
                 static_cast<uint64_t>(hi >> 61);
    s = (s & kModulus) + (s >> 61);
    return s >= kModulus ? s - kModulus : s;
  }

 private:
  uint64_t v_ = 0;
};

inline Fp field_add(Fp a, Fp b) { return a + b; }
inline Fp field_mul(Fp a, Fp b) { return a * b; }
inline Fp field_neg(Fp a) { return -a; }

// Sum of pairwise products, reducing lazily in 128-bit accumulators.
Fp dot_mod(std::span<const Fp> a, std::span<const Fp> b);
// Same with strided access into b (b[j * stride]).
Fp dot_mod_strided(std::span<const Fp> a, const Fp* b, size_t stride);

// Lazily-reduced accumulator for axpy-style loops.
class WideAccumulator {
 public:
  void add_product(Fp a, Fp b) {
    acc_ += static_cast<unsigned __int128>(a.value()) * b.value();
    if (++pending_ == 32) fold();
  }
  void add(Fp a) { acc_ += a.value(); }
  Fp result() const { return Fp::raw(Fp::reduce128(acc_)); }

 private:
  void fold() {
    acc_ = Fp::reduce128(acc_);
    pending_ = 0;
  }
  unsigned __int128 acc_ = 0;
  int pending_ = 0;
};

// Wire layout: 8 bytes little-endian per element.
inline constexpr size_t kElementBytes = 8;
void append_elements(std::vector<uint8_t>& out, std::span<const Fp> values);
std::vector<uint8_t> pack_elements(std::span<const Fp> values);
// Throws FormatError when the byte count is not a multiple of 8 or a value
// is not canonical.
std::vector<Fp> unpack_elements(std::span<const uint8_t> bytes);

void put_u64(std::vector<uint8_t>& out, uint64_t v);
void put_u32(std::vector<uint8_t>& out, uint32_t v);
void put_u16(std::vector<uint8_t>& out, uint16_t v);
uint64_t get_u64(const uint8_t* p);
uint32_t get_u32(const uint8_t* p);
uint16_t get_u16(const uint8_t* p);

// Real numbers as floor(x * 2^f) in F_p, negatives wrapped to p - |.|.
struct FixedPointCodec {
  int frac_bits = 16;
  double max_magnitude = 4096.0;  // 2^12

  Fp encode(double x) const;
  double decode(Fp e) const;
  // One unit in the last place.
  double ulp() const { return 1.0 / static_cast<double>(uint64_t{1} << frac_bits); }
  int64_t scale() const { return int64_t{1} << frac_bits; }
  // Encoded magnitude bits including the sign bit.
  int value_bits() const;

  std::vector<Fp> encode_all(std::span<const float> xs) const;
  std::vector<Fp> encode_all(std::span<const double> xs) const;
  std::vector<double> decode_all(std::span<const Fp> es) const;
};

inline Fp encode_fixed(double x, const FixedPointCodec& codec) { return codec.encode(x); }
inline double decode_fixed(Fp e, const FixedPointCodec& codec) { return codec.decode(e); }

// Bit budget of the protocol layer. Every masked opening c = value + offset +
// mask must stay below p, so value bits plus statistical masking bits have to
// fit in 60 bits.
struct FieldBudget {
  // 2f-precision results of a product or sum of products.
  int product_value_bits;
  int truncation_mask_bits;
  // Differences of two scores, compared by less-than-zero.
  int compare_value_bits;
  int compare_mask_bits;
  // Differences of two 2f-precision scores (ranking without truncation).
  int rank_value_bits;
  int rank_mask_bits;
  // Longest sum-of-products the engine accepts.
  size_t max_sum_length;
};

FieldBudget field_budget(const FixedPointCodec& codec);
// Throws ParameterError when the codec does not fit the field.
void check_field_budget(const FixedPointCodec& codec);

}  // namespace vecmpc
