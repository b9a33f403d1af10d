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

#include "vecmpc/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vecmpc {

Fp Fp::pow(uint64_t e) const {
  Fp base = *this;
  Fp acc(1);
  while (e != 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

Fp Fp::inverse() const {
  if (v_ == 0) throw ParameterError("inverse of zero");
  return pow(kModulus - 2);
}

Fp dot_mod(std::span<const Fp> a, std::span<const Fp> b) {
  if (a.size() != b.size()) throw DimensionError("dot_mod: length mismatch");
  unsigned __int128 acc = 0;
  size_t j = 0;
  const size_t n = a.size();
  while (j < n) {
    const size_t end = std::min(n, j + 32);
    for (; j < end; ++j) {
      acc += static_cast<unsigned __int128>(a[j].value()) * b[j].value();
    }
    acc = Fp::reduce128(acc);
  }
  return Fp::raw(Fp::reduce128(acc));
}

Fp dot_mod_strided(std::span<const Fp> a, const Fp* b, size_t stride) {
  unsigned __int128 acc = 0;
  size_t j = 0;
  const size_t n = a.size();
  while (j < n) {
    const size_t end = std::min(n, j + 32);
    for (; j < end; ++j) {
      acc += static_cast<unsigned __int128>(a[j].value()) * b[j * stride].value();
    }
    acc = Fp::reduce128(acc);
  }
  return Fp::raw(Fp::reduce128(acc));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void append_elements(std::vector<uint8_t>& out, std::span<const Fp> values) {
  const size_t base = out.size();
  out.resize(base + values.size() * kElementBytes);
  uint8_t* dst = out.data() + base;
  for (Fp v : values) {
    uint64_t x = v.value();
    for (int i = 0; i < 8; ++i) *dst++ = static_cast<uint8_t>(x >> (8 * i));
  }
}

std::vector<uint8_t> pack_elements(std::span<const Fp> values) {
  std::vector<uint8_t> out;
  append_elements(out, values);
  return out;
}

std::vector<Fp> unpack_elements(std::span<const uint8_t> bytes) {
  if (bytes.size() % kElementBytes != 0) {
    throw FormatError("element payload length " + std::to_string(bytes.size()) +
                      " is not a multiple of 8");
  }
  std::vector<Fp> out(bytes.size() / kElementBytes);
  for (size_t i = 0; i < out.size(); ++i) {
    uint64_t x = get_u64(bytes.data() + i * kElementBytes);
    if (x >= Fp::kModulus) throw FormatError("non-canonical field element");
    out[i] = Fp::raw(x);
  }
  return out;
}

Fp FixedPointCodec::encode(double x) const {
  if (!std::isfinite(x) || std::fabs(x) > max_magnitude) {
    throw EncodingError("value " + std::to_string(x) + " outside fixed-point range +-" +
                        std::to_string(max_magnitude));
  }
  const double scaled = std::floor(std::ldexp(x, frac_bits));
  return Fp::from_signed(static_cast<int64_t>(scaled));
}

double FixedPointCodec::decode(Fp e) const {
  return std::ldexp(static_cast<double>(e.to_signed()), -frac_bits);
}

int FixedPointCodec::value_bits() const {
  return static_cast<int>(std::ceil(std::log2(max_magnitude))) + frac_bits + 1;
}

std::vector<Fp> FixedPointCodec::encode_all(std::span<const float> xs) const {
  std::vector<Fp> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out[i] = encode(xs[i]);
  return out;
}

std::vector<Fp> FixedPointCodec::encode_all(std::span<const double> xs) const {
  std::vector<Fp> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out[i] = encode(xs[i]);
  return out;
}

std::vector<double> FixedPointCodec::decode_all(std::span<const Fp> es) const {
  std::vector<double> out(es.size());
  for (size_t i = 0; i < es.size(); ++i) out[i] = decode(es[i]);
  return out;
}

namespace {
constexpr int kMaskedOpeningBits = 60;
}  // namespace

FieldBudget field_budget(const FixedPointCodec& codec) {
  const int magnitude_bits = static_cast<int>(std::ceil(std::log2(codec.max_magnitude)));
  FieldBudget b{};
  b.product_value_bits = magnitude_bits + 2 * codec.frac_bits + 1;
  b.truncation_mask_bits = kMaskedOpeningBits - b.product_value_bits;
  b.compare_value_bits = magnitude_bits + 1 + codec.frac_bits + 1;
  b.compare_mask_bits = kMaskedOpeningBits - b.compare_value_bits;
  b.rank_value_bits = magnitude_bits + 1 + 2 * codec.frac_bits + 1;
  b.rank_mask_bits = kMaskedOpeningBits - b.rank_value_bits;
  b.max_sum_length = 8192;
  return b;
}

void check_field_budget(const FixedPointCodec& codec) {
  if (codec.frac_bits < 1 || codec.frac_bits > 24 || !(codec.max_magnitude >= 1.0)) {
    throw ParameterError("fixed-point codec parameters out of range");
  }
  const int magnitude_bits = static_cast<int>(std::ceil(std::log2(codec.max_magnitude)));
  // A single un-truncated product of two in-range encodings, plus sign.
  if (2 * (magnitude_bits + codec.frac_bits) + 1 >= Fp::kBits) {
    throw ParameterError("product of two encodings would wrap the field");
  }
  const FieldBudget b = field_budget(codec);
  if (b.truncation_mask_bits < 8 || b.compare_mask_bits < 8 || b.rank_mask_bits < 8) {
    throw ParameterError("not enough statistical masking bits left in the field");
  }
}

}  // namespace vecmpc
