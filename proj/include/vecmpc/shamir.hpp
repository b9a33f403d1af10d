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
#include <span>
#include <vector>

#include "vecmpc/field.hpp"
#include "vecmpc/random.hpp"

namespace vecmpc {

using PartyId = uint16_t;

// Shamir parameters for n servers tolerating t semi-honest corruptions.
// Party i evaluates at x = i + 1.
class ShareScheme {
 public:
  // Requires 1 <= t and n >= 2t + 1, so degree-2t products can be opened.
  ShareScheme(int n_servers, int t);
  // t = floor((n - 1) / 2).
  static ShareScheme honest_majority(int n_servers);

  int n() const { return n_; }
  int t() const { return t_; }
  Fp point(PartyId party) const { return Fp(static_cast<uint64_t>(party) + 1); }

  // Coefficients l_j with f(0) = sum_j l_j f(x_j), for parties 0..degree.
  std::span<const Fp> prefix_lagrange(int degree) const;
  std::vector<Fp> lagrange_at_zero(std::span<const PartyId> parties) const;

  // powers()[party * (max_degree + 1) + k] = x_party^k, max_degree = n - 1.
  std::span<const Fp> powers() const { return powers_; }

  friend bool operator==(const ShareScheme& a, const ShareScheme& b) {
    return a.n_ == b.n_ && a.t_ == b.t_;
  }

 private:
  int n_;
  int t_;
  std::vector<std::vector<Fp>> prefix_lagrange_;
  std::vector<Fp> powers_;
};

struct Share {
  PartyId party = 0;
  int degree = 0;
  Fp value;
};

// Shares of `secret` on a fresh random polynomial of the given degree.
std::vector<Share> ss_share(Fp secret, int degree, const ShareScheme& scheme, Prg& prg);

// Interpolates at zero from the first degree + 1 shares. Throws
// ReconstructionError with fewer shares or inconsistent degrees.
Fp ss_reveal(std::span<const Share> shares, const ShareScheme& scheme);

// Batched sharing: result[party][i] is party's share of secrets[i].
std::vector<std::vector<Fp>> share_batch(std::span<const Fp> secrets, int degree,
                                         const ShareScheme& scheme, Prg& prg);

// Writes one sharing into out[party][index].
void share_into(Fp secret, int degree, const ShareScheme& scheme, Prg& prg,
                std::vector<std::vector<Fp>>& out, size_t index);

// Inverse of share_batch using parties 0..degree.
std::vector<Fp> reveal_batch(const std::vector<std::vector<Fp>>& per_party, int degree,
                             const ShareScheme& scheme);

}  // namespace vecmpc
