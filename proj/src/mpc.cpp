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

#include "vecmpc/mpc.hpp"

#include <string>

namespace vecmpc {

namespace {

// Masks for truncation and comparison are drawn below 2^60 so that
// value + offset + mask never wraps around p.
constexpr uint32_t kMaskBits = 60;

std::vector<Fp> interpolate(const std::vector<std::vector<uint8_t>>& payloads, size_t count,
                            int degree, const ShareScheme& scheme) {
  const auto coeffs = scheme.prefix_lagrange(degree);
  std::vector<std::vector<Fp>> shares(degree + 1);
  for (int p = 0; p <= degree; ++p) {
    shares[p] = unpack_elements(payloads[p]);
    if (shares[p].size() != count) {
      throw ProtocolError("opening from party " + std::to_string(p) + " has " +
                          std::to_string(shares[p].size()) + " elements, expected " +
                          std::to_string(count));
    }
  }
  std::vector<Fp> out(count);
  for (size_t i = 0; i < count; ++i) {
    WideAccumulator acc;
    for (int p = 0; p <= degree; ++p) acc.add_product(coeffs[p], shares[p][i]);
    out[i] = acc.result();
  }
  return out;
}

void check_same_length(std::span<const Fp> a, std::span<const Fp> b) {
  if (a.size() != b.size()) {
    throw DimensionError("operand lengths differ: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

uint32_t checked_count(size_t n) {
  if (n > 0xffffffffu) throw ParameterError("batch too large");
  return static_cast<uint32_t>(n);
}

}  // namespace

PartyContext::PartyContext(ShareScheme scheme, FixedPointCodec codec, Session& session,
                           PreprocSource& preproc)
    : scheme_(std::move(scheme)),
      codec_(codec),
      budget_(field_budget(codec)),
      session_(session),
      preproc_(preproc) {
  check_field_budget(codec_);
  if (session_.self() >= scheme_.n()) throw ParameterError("party id outside the scheme");
  for (int p = 0; p < scheme_.n(); ++p) servers_.push_back(static_cast<PartyId>(p));
}

MaterialBatch PartyContext::take(const MaterialRequest& request) {
  MaterialBatch batch = preproc_.take(request);
  if (!(batch.request == request) || batch.data.size() != request.elements_per_party()) {
    throw MaterialError("preprocessing source returned " + batch.request.describe() +
                        " for " + request.describe());
  }
  return batch;
}

std::vector<Fp> PartyContext::open_values(std::span<const Fp> shares, int degree,
                                          MessageKind kind) {
  if (degree + 1 > n()) throw ReconstructionError("degree too high to open");
  auto received = session_.broadcast_round(servers_, kind, pack_elements(shares));
  return interpolate(received, shares.size(), degree, scheme_);
}

std::vector<Fp> PartyContext::open_to(PartyId recipient, std::span<const Fp> shares, int degree,
                                      MessageKind kind) {
  if (recipient >= n()) throw ParameterError("open_to recipient is not a server");
  if (degree + 1 > n()) throw ReconstructionError("degree too high to open");
  const uint32_t round = session_.round();
  std::vector<Fp> out;
  if (id() != recipient) {
    session_.send(recipient, kind, round, pack_elements(shares));
  } else {
    std::vector<std::vector<uint8_t>> received(n());
    for (PartyId p : servers_) {
      received[p] = p == id() ? pack_elements(shares) : session_.receive(p, kind, round);
    }
    out = interpolate(received, shares.size(), degree, scheme_);
  }
  session_.advance_round();
  return out;
}

std::vector<Fp> reduce_degree(PartyContext& ctx, std::span<const Fp> z2t) {
  const size_t count = z2t.size();
  if (count == 0) return {};
  const MaterialBatch m = ctx.take({MaterialKind::kDoubleSharing, checked_count(count), 0, 0, 0});
  const Fp* r_t = m.data.data();
  const Fp* r_2t = m.data.data() + count;
  std::vector<Fp> masked(count);
  for (size_t i = 0; i < count; ++i) masked[i] = z2t[i] + r_2t[i];
  const std::vector<Fp> c = ctx.open_values(masked, 2 * ctx.t(), MessageKind::kMulOpen);
  std::vector<Fp> out(count);
  for (size_t i = 0; i < count; ++i) out[i] = c[i] - r_t[i];
  return out;
}

namespace {

// Opens value + 2^offset_bits + r for r = r_hi * 2^f + r_lo < 2^60, then
// returns (c >> f) - 2^(offset_bits - f) - [r_hi].
std::vector<Fp> masked_truncation(PartyContext& ctx, std::span<const Fp> z, int degree) {
  const size_t count = z.size();
  if (count == 0) return {};
  const int f = ctx.codec().frac_bits;
  const int offset_bits = ctx.budget().product_value_bits - 1;
  const MaterialBatch m = ctx.take({MaterialKind::kTruncMask, checked_count(count),
                                    static_cast<uint32_t>(degree), static_cast<uint32_t>(f),
                                    kMaskBits});
  const Fp* r = m.data.data();
  const Fp* r_hi = m.data.data() + count;
  const Fp offset(uint64_t{1} << offset_bits);
  std::vector<Fp> masked(count);
  for (size_t i = 0; i < count; ++i) masked[i] = z[i] + offset + r[i];
  const std::vector<Fp> c = ctx.open_values(masked, degree, MessageKind::kTruncOpen);
  const Fp shifted_offset(uint64_t{1} << (offset_bits - f));
  std::vector<Fp> out(count);
  for (size_t i = 0; i < count; ++i) {
    out[i] = Fp(c[i].value() >> f) - shifted_offset - r_hi[i];
  }
  return out;
}

}  // namespace

std::vector<Fp> reduce_truncate(PartyContext& ctx, std::span<const Fp> z2t) {
  return masked_truncation(ctx, z2t, 2 * ctx.t());
}

std::vector<Fp> truncate(PartyContext& ctx, std::span<const Fp> a) {
  return masked_truncation(ctx, a, ctx.t());
}

std::vector<Fp> mul(PartyContext& ctx, std::span<const Fp> a, std::span<const Fp> b) {
  check_same_length(a, b);
  std::vector<Fp> z(a.size());
  for (size_t i = 0; i < a.size(); ++i) z[i] = a[i] * b[i];
  return reduce_degree(ctx, z);
}

std::vector<Fp> mul_fixed(PartyContext& ctx, std::span<const Fp> a, std::span<const Fp> b) {
  check_same_length(a, b);
  std::vector<Fp> z(a.size());
  for (size_t i = 0; i < a.size(); ++i) z[i] = a[i] * b[i];
  return reduce_truncate(ctx, z);
}

Fp sum_prod(PartyContext& ctx, std::span<const Fp> x, std::span<const Fp> y) {
  check_same_length(x, y);
  if (x.size() > ctx.budget().max_sum_length) {
    throw ParameterError("sum of " + std::to_string(x.size()) +
                         " products exceeds the field headroom (max " +
                         std::to_string(ctx.budget().max_sum_length) + ")");
  }
  const Fp z = dot_mod(x, y);
  return reduce_truncate(ctx, std::span<const Fp>(&z, 1)).front();
}

std::vector<Fp> bit_less_than(PartyContext& ctx, std::span<const uint64_t> c,
                              std::span<const Fp> r_bits, int bits) {
  const size_t count = c.size();
  if (r_bits.size() != count * static_cast<size_t>(bits)) {
    throw DimensionError("bit_less_than: bit sharing count mismatch");
  }
  if (count == 0) return {};

  // Blocks ordered from the most significant bit down. For each block,
  // lt = [c_block < r_block] and eq = [c_block == r_block]. The lowest block
  // never needs eq.
  struct Block {
    std::vector<Fp> lt;
    std::vector<Fp> eq;
  };
  std::vector<Block> blocks(bits);
  const Fp one(1);
  for (int j = 0; j < bits; ++j) {
    const int b = bits - 1 - j;
    Block& blk = blocks[j];
    blk.lt.resize(count);
    if (j + 1 < bits) blk.eq.resize(count);
    for (size_t i = 0; i < count; ++i) {
      const Fp r = r_bits[i * bits + b];
      const bool cb = (c[i] >> b) & 1;
      blk.lt[i] = cb ? Fp() : r;
      if (j + 1 < bits) blk.eq[i] = cb ? r : one - r;
    }
  }

  while (blocks.size() > 1) {
    const size_t pairs = blocks.size() / 2;
    const bool odd = blocks.size() % 2 == 1;
    // The merged pair is the lowest block only when there is no pass-through.
    std::vector<Fp> left;
    std::vector<Fp> right;
    left.reserve(2 * pairs * count);
    right.reserve(2 * pairs * count);
    for (size_t q = 0; q < pairs; ++q) {
      const Block& hi = blocks[2 * q];
      const Block& lo = blocks[2 * q + 1];
      left.insert(left.end(), hi.eq.begin(), hi.eq.end());
      right.insert(right.end(), lo.lt.begin(), lo.lt.end());
      const bool lowest = !odd && q + 1 == pairs;
      if (!lowest) {
        left.insert(left.end(), hi.eq.begin(), hi.eq.end());
        right.insert(right.end(), lo.eq.begin(), lo.eq.end());
      }
    }
    const std::vector<Fp> prod = mul(ctx, left, right);
    std::vector<Block> next;
    next.reserve(pairs + 1);
    size_t pos = 0;
    for (size_t q = 0; q < pairs; ++q) {
      const Block& hi = blocks[2 * q];
      Block merged;
      merged.lt.resize(count);
      for (size_t i = 0; i < count; ++i) merged.lt[i] = hi.lt[i] + prod[pos + i];
      pos += count;
      const bool lowest = !odd && q + 1 == pairs;
      if (!lowest) {
        merged.eq.assign(prod.begin() + static_cast<ptrdiff_t>(pos),
                         prod.begin() + static_cast<ptrdiff_t>(pos + count));
        pos += count;
      }
      next.push_back(std::move(merged));
    }
    if (odd) next.push_back(std::move(blocks.back()));
    blocks = std::move(next);
  }
  return std::move(blocks.front().lt);
}

std::vector<Fp> less_than_zero(PartyContext& ctx, std::span<const Fp> a, int value_bits) {
  const size_t count = a.size();
  if (count == 0) return {};
  // a is in [-2^(K-1), 2^(K-1)); b = a + 2^(K-1) is in [0, 2^K) and its top
  // bit is set exactly when a >= 0.
  const int K = value_bits > 0 ? value_bits : ctx.budget().compare_value_bits;
  if (K < 2 || K + 1 > static_cast<int>(kMaskBits)) throw ParameterError("comparison width out of range");
  const int low_bits = K - 1;
  const MaterialBatch m = ctx.take({MaterialKind::kCompareMask, checked_count(count),
                                    static_cast<uint32_t>(low_bits), kMaskBits, 0});
  const std::span<const Fp> r_bits(m.data.data(), count * low_bits);
  const Fp* r = m.data.data() + count * low_bits;

  const Fp half(uint64_t{1} << low_bits);
  std::vector<Fp> b(count);
  std::vector<Fp> masked(count);
  for (size_t i = 0; i < count; ++i) {
    b[i] = a[i] + half;
    masked[i] = b[i] + r[i];
  }
  const std::vector<Fp> opened = ctx.open_values(masked, ctx.t(), MessageKind::kCompareOpen);

  const uint64_t low_mask = (uint64_t{1} << low_bits) - 1;
  std::vector<uint64_t> c_low(count);
  for (size_t i = 0; i < count; ++i) c_low[i] = opened[i].value() & low_mask;
  const std::vector<Fp> u = bit_less_than(ctx, c_low, r_bits, low_bits);

  const Fp inv_half = half.inverse();
  const Fp one(1);
  std::vector<Fp> out(count);
  for (size_t i = 0; i < count; ++i) {
    WideAccumulator r_low;
    for (int j = 0; j < low_bits; ++j) {
      r_low.add_product(r_bits[i * low_bits + j], Fp(uint64_t{1} << j));
    }
    // b mod 2^(K-1) = c_low - r_low + 2^(K-1) * [c_low < r_low]
    const Fp b_mod = Fp(c_low[i]) - r_low.result() + half * u[i];
    const Fp msb = (b[i] - b_mod) * inv_half;
    out[i] = one - msb;
  }
  return out;
}

std::vector<Fp> ge(PartyContext& ctx, std::span<const Fp> a, std::span<const Fp> b,
                   int value_bits) {
  check_same_length(a, b);
  std::vector<Fp> diff(a.size());
  for (size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  std::vector<Fp> ltz = less_than_zero(ctx, diff, value_bits);
  const Fp one(1);
  for (Fp& v : ltz) v = one - v;
  return ltz;
}

}  // namespace vecmpc
