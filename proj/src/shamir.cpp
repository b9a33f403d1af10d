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

#include "vecmpc/shamir.hpp"

#include <string>

namespace vecmpc {

ShareScheme::ShareScheme(int n_servers, int t) : n_(n_servers), t_(t) {
  if (t < 1 || n_servers < 2 * t + 1 || n_servers > 255) {
    throw ParameterError("invalid share scheme n=" + std::to_string(n_servers) +
                         " t=" + std::to_string(t) + " (need 1 <= t, n >= 2t+1)");
  }
  prefix_lagrange_.resize(n_);
  for (int degree = 0; degree < n_; ++degree) {
    std::vector<PartyId> parties(degree + 1);
    for (int i = 0; i <= degree; ++i) parties[i] = static_cast<PartyId>(i);
    prefix_lagrange_[degree] = lagrange_at_zero(parties);
  }
  powers_.resize(static_cast<size_t>(n_) * n_);
  for (int p = 0; p < n_; ++p) {
    Fp x = point(static_cast<PartyId>(p));
    Fp acc(1);
    for (int k = 0; k < n_; ++k) {
      powers_[p * n_ + k] = acc;
      acc *= x;
    }
  }
}

ShareScheme ShareScheme::honest_majority(int n_servers) {
  return ShareScheme(n_servers, (n_servers - 1) / 2);
}

std::span<const Fp> ShareScheme::prefix_lagrange(int degree) const {
  if (degree < 0 || degree >= n_) throw ParameterError("sharing degree out of range");
  return prefix_lagrange_[degree];
}

std::vector<Fp> ShareScheme::lagrange_at_zero(std::span<const PartyId> parties) const {
  std::vector<Fp> coeffs(parties.size());
  for (size_t j = 0; j < parties.size(); ++j) {
    Fp num(1);
    Fp den(1);
    const Fp xj = point(parties[j]);
    for (size_t m = 0; m < parties.size(); ++m) {
      if (m == j) continue;
      const Fp xm = point(parties[m]);
      if (xm == xj) throw ReconstructionError("duplicate party in interpolation set");
      num *= xm;
      den *= xm - xj;
    }
    coeffs[j] = num * den.inverse();
  }
  return coeffs;
}

void share_into(Fp secret, int degree, const ShareScheme& scheme, Prg& prg,
                std::vector<std::vector<Fp>>& out, size_t index) {
  const int n = scheme.n();
  Fp coeffs[256];
  for (int k = 1; k <= degree; ++k) coeffs[k] = prg.next_field();
  const auto powers = scheme.powers();
  for (int p = 0; p < n; ++p) {
    WideAccumulator acc;
    acc.add(secret);
    const Fp* xp = powers.data() + static_cast<size_t>(p) * n;
    for (int k = 1; k <= degree; ++k) acc.add_product(coeffs[k], xp[k]);
    out[p][index] = acc.result();
  }
}

std::vector<Share> ss_share(Fp secret, int degree, const ShareScheme& scheme, Prg& prg) {
  if (degree < 0 || degree >= scheme.n()) throw ParameterError("sharing degree out of range");
  std::vector<std::vector<Fp>> tmp(scheme.n(), std::vector<Fp>(1));
  share_into(secret, degree, scheme, prg, tmp, 0);
  std::vector<Share> shares(scheme.n());
  for (int p = 0; p < scheme.n(); ++p) {
    shares[p] = Share{static_cast<PartyId>(p), degree, tmp[p][0]};
  }
  return shares;
}

Fp ss_reveal(std::span<const Share> shares, const ShareScheme& scheme) {
  if (shares.empty()) throw ReconstructionError("no shares to reveal");
  const int degree = shares.front().degree;
  for (const Share& s : shares) {
    if (s.degree != degree) throw ReconstructionError("shares of mixed degree");
  }
  if (static_cast<int>(shares.size()) < degree + 1) {
    throw ReconstructionError("need " + std::to_string(degree + 1) + " shares, have " +
                              std::to_string(shares.size()));
  }
  std::vector<PartyId> parties(degree + 1);
  for (int i = 0; i <= degree; ++i) parties[i] = shares[i].party;
  const std::vector<Fp> coeffs = scheme.lagrange_at_zero(parties);
  WideAccumulator acc;
  for (int i = 0; i <= degree; ++i) acc.add_product(coeffs[i], shares[i].value);
  return acc.result();
}

std::vector<std::vector<Fp>> share_batch(std::span<const Fp> secrets, int degree,
                                         const ShareScheme& scheme, Prg& prg) {
  if (degree < 0 || degree >= scheme.n()) throw ParameterError("sharing degree out of range");
  std::vector<std::vector<Fp>> out(scheme.n(), std::vector<Fp>(secrets.size()));
  for (size_t i = 0; i < secrets.size(); ++i) share_into(secrets[i], degree, scheme, prg, out, i);
  return out;
}

std::vector<Fp> reveal_batch(const std::vector<std::vector<Fp>>& per_party, int degree,
                             const ShareScheme& scheme) {
  if (static_cast<int>(per_party.size()) < degree + 1) {
    throw ReconstructionError("not enough parties to reveal");
  }
  const auto coeffs = scheme.prefix_lagrange(degree);
  const size_t count = per_party.front().size();
  std::vector<Fp> out(count);
  for (size_t i = 0; i < count; ++i) {
    WideAccumulator acc;
    for (int p = 0; p <= degree; ++p) acc.add_product(coeffs[p], per_party[p][i]);
    out[i] = acc.result();
  }
  return out;
}

}  // namespace vecmpc
