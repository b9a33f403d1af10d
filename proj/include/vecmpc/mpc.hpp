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

#include <span>
#include <vector>

#include "vecmpc/field.hpp"
#include "vecmpc/net.hpp"
#include "vecmpc/preproc.hpp"
#include "vecmpc/shamir.hpp"

namespace vecmpc {

// A server's handle on one session. Unless stated otherwise every Fp passed
// to or returned from the primitives below is this party's degree-t share.
class PartyContext {
 public:
  PartyContext(ShareScheme scheme, FixedPointCodec codec, Session& session,
               PreprocSource& preproc);

  PartyId id() const { return session_.self(); }
  int n() const { return scheme_.n(); }
  int t() const { return scheme_.t(); }
  const ShareScheme& scheme() const { return scheme_; }
  const FixedPointCodec& codec() const { return codec_; }
  const FieldBudget& budget() const { return budget_; }
  Session& session() { return session_; }
  std::span<const PartyId> servers() const { return servers_; }

  MaterialBatch take(const MaterialRequest& request);

  // Every server sends its shares to every other server; all learn the
  // values. One round.
  std::vector<Fp> open_values(std::span<const Fp> shares, int degree,
                              MessageKind kind = MessageKind::kReveal);
  // Only `recipient` learns the values; other servers get an empty vector.
  // One round.
  std::vector<Fp> open_to(PartyId recipient, std::span<const Fp> shares, int degree,
                          MessageKind kind = MessageKind::kReveal);

 private:
  ShareScheme scheme_;
  FixedPointCodec codec_;
  FieldBudget budget_;
  Session& session_;
  PreprocSource& preproc_;
  std::vector<PartyId> servers_;
};

// Degree-2t shares -> degree-t shares of the same integers. One round, one
// double sharing per element.
std::vector<Fp> reduce_degree(PartyContext& ctx, std::span<const Fp> z2t);

// Degree-2t shares of 2f-precision values -> degree-t shares at precision f.
// Re-randomization and probabilistic truncation share one opening. The
// result may be one ulp above the floor.
std::vector<Fp> reduce_truncate(PartyContext& ctx, std::span<const Fp> z2t);

// Degree-t shares of 2f-precision values -> precision f. One round.
std::vector<Fp> truncate(PartyContext& ctx, std::span<const Fp> a);

// Element-wise products of integers (bits, one-hot entries, bit x value).
std::vector<Fp> mul(PartyContext& ctx, std::span<const Fp> a, std::span<const Fp> b);
// Element-wise fixed-point products, truncated back to precision f.
std::vector<Fp> mul_fixed(PartyContext& ctx, std::span<const Fp> a, std::span<const Fp> b);

// [sum_j x_j y_j] at precision f. Opens one element regardless of length.
Fp sum_prod(PartyContext& ctx, std::span<const Fp> x, std::span<const Fp> y);

// Shares of the bit [a < 0] for a with |a| < 2^(value_bits - 1) in encoded
// units. value_bits 0 means the budget's compare_value_bits (precision f).
// LTZ(0) = 0.
std::vector<Fp> less_than_zero(PartyContext& ctx, std::span<const Fp> a, int value_bits = 0);
// [a >= b] = 1 - LTZ(a - b).
std::vector<Fp> ge(PartyContext& ctx, std::span<const Fp> a, std::span<const Fp> b,
                   int value_bits = 0);

// [c < r] for public c below 2^bits and r given by shared bits
// (bit b of item i at r_bits[i * bits + b]). Used inside less_than_zero.
std::vector<Fp> bit_less_than(PartyContext& ctx, std::span<const uint64_t> c,
                              std::span<const Fp> r_bits, int bits);

}  // namespace vecmpc
