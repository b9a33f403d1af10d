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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "test_util.hpp"
#include "vecmpc/preproc.hpp"
#include "vecmpc/shamir.hpp"

namespace vecmpc {
namespace {

// Lagrange interpolation at zero written out directly with 128-bit
// arithmetic and Fermat inverses, independent of ShareScheme.
uint64_t oracle_interpolate(const std::vector<Share>& shares) {
  const uint64_t P = Fp::kModulus;
  auto mulm = [&](uint64_t a, uint64_t b) { return testing::mod_p((unsigned __int128)a * b); };
  auto powm = [&](uint64_t b, uint64_t e) {
    uint64_t r = 1;
    while (e) {
      if (e & 1) r = mulm(r, b);
      b = mulm(b, b);
      e >>= 1;
    }
    return r;
  };
  uint64_t acc = 0;
  for (size_t j = 0; j < shares.size(); ++j) {
    uint64_t num = 1, den = 1;
    const uint64_t xj = shares[j].party + 1;
    for (size_t m = 0; m < shares.size(); ++m) {
      if (m == j) continue;
      const uint64_t xm = shares[m].party + 1;
      num = mulm(num, xm);
      den = mulm(den, (xm + P - xj) % P);
    }
    const uint64_t l = mulm(num, powm(den, P - 2));
    acc = (acc + mulm(l, shares[j].value.value())) % P;
  }
  return acc;
}

class SchemeSizes : public ::testing::TestWithParam<int> {};

TEST_P(SchemeSizes, ShareRevealRoundTrip) {
  const ShareScheme scheme = ShareScheme::honest_majority(GetParam());
  Prg prg(GetParam());
  const auto zero = ss_share(Fp(0), scheme.t(), scheme, prg);
  EXPECT_EQ(ss_reveal(zero, scheme), Fp(0));
  for (int i = 0; i < 10000; ++i) {
    const Fp x = prg.next_field();
    const auto shares = ss_share(x, scheme.t(), scheme, prg);
    ASSERT_EQ(shares.size(), static_cast<size_t>(scheme.n()));
    ASSERT_EQ(ss_reveal(shares, scheme), x);
  }
}

TEST_P(SchemeSizes, EverySubsetOfDegreePlusOneAgrees) {
  const ShareScheme scheme = ShareScheme::honest_majority(GetParam());
  Prg prg(100 + GetParam());
  const int n = scheme.n();
  for (int degree : {scheme.t(), 2 * scheme.t()}) {
    const Fp x = prg.next_field();
    const auto shares = ss_share(x, degree, scheme, prg);
    // Enumerate all subsets of size degree + 1.
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (__builtin_popcount(mask) != degree + 1) continue;
      std::vector<Share> subset;
      for (int p = 0; p < n; ++p) {
        if (mask & (1u << p)) subset.push_back(shares[p]);
      }
      ASSERT_EQ(ss_reveal(subset, scheme), x);
      ASSERT_EQ(oracle_interpolate(subset), x.value());
    }
  }
}

TEST_P(SchemeSizes, BatchMatchesScalar) {
  const ShareScheme scheme = ShareScheme::honest_majority(GetParam());
  Prg prg(7);
  std::vector<Fp> secrets(100);
  prg.fill_field(secrets);
  const auto per_party = share_batch(secrets, scheme.t(), scheme, prg);
  EXPECT_EQ(reveal_batch(per_party, scheme.t(), scheme), secrets);
}

INSTANTIATE_TEST_SUITE_P(Parties, SchemeSizes, ::testing::Values(3, 5, 7));

TEST(Shamir, RevealExamples) {
  const ShareScheme scheme(3, 1);
  Prg prg(1);
  auto shares = ss_share(Fp(42), 1, scheme, prg);
  std::vector<Share> two(shares.begin(), shares.begin() + 2);
  EXPECT_EQ(ss_reveal(two, scheme), Fp(42));
  std::vector<Share> one(shares.begin(), shares.begin() + 1);
  EXPECT_THROW(ss_reveal(one, scheme), ReconstructionError);
  EXPECT_THROW(ss_reveal(std::vector<Share>{}, scheme), ReconstructionError);
  auto wide = ss_share(Fp(42), 2, scheme, prg);
  std::vector<Share> mixed = {shares[0], wide[1], wide[2]};
  EXPECT_THROW(ss_reveal(mixed, scheme), ReconstructionError);
  std::vector<Share> short_wide(wide.begin(), wide.begin() + 2);
  EXPECT_THROW(ss_reveal(short_wide, scheme), ReconstructionError);
}

TEST(Shamir, SchemeValidation) {
  EXPECT_THROW(ShareScheme(2, 1), ParameterError);
  EXPECT_THROW(ShareScheme(3, 0), ParameterError);
  EXPECT_NO_THROW(ShareScheme(3, 1));
  EXPECT_EQ(ShareScheme::honest_majority(7).t(), 3);
  EXPECT_EQ(ShareScheme::honest_majority(4).t(), 1);
}

// For t = 1, n = 3 a single party's share of a fixed secret is uniform.
TEST(Shamir, SingleShareUniform) {
  const ShareScheme scheme(3, 1);
  Prg prg(99);
  for (PartyId party = 0; party < 3; ++party) {
    std::vector<uint64_t> counts(32, 0);
    for (int i = 0; i < 10000; ++i) {
      const auto shares = ss_share(Fp(123456), 1, scheme, prg);
      ++counts[shares[party].value.value() >> 56];
    }
    EXPECT_GT(testing::chi_square_uniform_p(counts), 0.001) << "party " << party;
  }
}

// ------------------------------------------------------------------------
// Dealer material

TEST(Dealer, DoubleSharingsRevealSameValue) {
  const ShareScheme scheme(5, 2);
  Dealer dealer(scheme, 3);
  const auto batches = dealer.generate({MaterialKind::kDoubleSharing, 50, 0, 0, 0});
  std::vector<std::vector<Fp>> low(5), high(5);
  for (int p = 0; p < 5; ++p) {
    low[p].assign(batches[p].data.begin(), batches[p].data.begin() + 50);
    high[p].assign(batches[p].data.begin() + 50, batches[p].data.end());
  }
  EXPECT_EQ(reveal_batch(low, 2, scheme), reveal_batch(high, 4, scheme));
  // The degree-t half is consistent with any t+1 parties.
  std::vector<Share> s;
  for (int p = 2; p < 5; ++p) s.push_back({static_cast<PartyId>(p), 2, low[p][7]});
  EXPECT_EQ(ss_reveal(s, scheme), reveal_batch(low, 2, scheme)[7]);
}

TEST(Dealer, TruncationMaskStructure) {
  const ShareScheme scheme(3, 1);
  Dealer dealer(scheme, 4);
  const uint32_t count = 200;
  const auto batches = dealer.generate({MaterialKind::kTruncMask, count, 2, 16, 60});
  std::vector<std::vector<Fp>> r(3), hi(3);
  for (int p = 0; p < 3; ++p) {
    r[p].assign(batches[p].data.begin(), batches[p].data.begin() + count);
    hi[p].assign(batches[p].data.begin() + count, batches[p].data.end());
  }
  const auto rv = reveal_batch(r, 2, scheme);
  const auto hv = reveal_batch(hi, 1, scheme);
  for (uint32_t i = 0; i < count; ++i) {
    ASSERT_LT(rv[i].value(), uint64_t{1} << 60);
    ASSERT_EQ(rv[i].value() >> 16, hv[i].value());
  }
}

TEST(Dealer, CompareMaskBitsMatchValue) {
  const ShareScheme scheme(3, 1);
  Dealer dealer(scheme, 5);
  const uint32_t count = 100, bits = 29;
  const auto batches = dealer.generate({MaterialKind::kCompareMask, count, bits, 60, 0});
  std::vector<std::vector<Fp>> per(3);
  for (int p = 0; p < 3; ++p) per[p] = batches[p].data;
  const auto all = reveal_batch(per, 1, scheme);
  for (uint32_t i = 0; i < count; ++i) {
    const uint64_t r = all[count * bits + i].value();
    ASSERT_LT(r, uint64_t{1} << 60);
    for (uint32_t b = 0; b < bits; ++b) {
      ASSERT_EQ(all[i * bits + b].value(), (r >> b) & 1);
    }
  }
}

TEST(Dealer, PermutationIsPermutationMatrix) {
  const ShareScheme scheme(3, 1);
  Dealer dealer(scheme, 6);
  const uint32_t size = 9;
  const auto batches = dealer.generate({MaterialKind::kPermutation, 3, size, 0, 0});
  std::vector<std::vector<Fp>> per(3);
  for (int p = 0; p < 3; ++p) per[p] = batches[p].data;
  const auto all = reveal_batch(per, 1, scheme);
  for (uint32_t m = 0; m < 3; ++m) {
    for (uint32_t i = 0; i < size; ++i) {
      uint64_t row = 0, col = 0;
      for (uint32_t j = 0; j < size; ++j) {
        const uint64_t v = all[m * size * size + i * size + j].value();
        ASSERT_LE(v, 1u);
        row += v;
        col += all[m * size * size + j * size + i].value();
      }
      ASSERT_EQ(row, 1u);
      ASSERT_EQ(col, 1u);
    }
  }
}

TEST(Dealer, DeterministicUnderSeed) {
  const ShareScheme scheme(3, 1);
  Dealer a(scheme, 8), b(scheme, 8);
  const MaterialRequest req{MaterialKind::kDoubleSharing, 10, 0, 0, 0};
  EXPECT_EQ(a.generate(req)[1].data, b.generate(req)[1].data);
}

TEST(SharedDealer, ServesSameBatchAndDetectsDivergence) {
  const ShareScheme scheme(3, 1);
  SharedDealer dealer(scheme, 9);
  const MaterialRequest req{MaterialKind::kDoubleSharing, 4, 0, 0, 0};
  std::vector<std::vector<Fp>> per(3);
  for (PartyId p = 0; p < 3; ++p) per[p] = dealer.take(p, req).data;
  std::vector<std::vector<Fp>> low(3);
  for (int p = 0; p < 3; ++p) low[p].assign(per[p].begin(), per[p].begin() + 4);
  std::vector<std::vector<Fp>> high(3);
  for (int p = 0; p < 3; ++p) high[p].assign(per[p].begin() + 4, per[p].end());
  EXPECT_EQ(reveal_batch(low, 1, scheme), reveal_batch(high, 2, scheme));

  dealer.take(0, req);
  EXPECT_THROW(dealer.take(1, {MaterialKind::kDoubleSharing, 5, 0, 0, 0}), MaterialError);
}

TEST(PreprocFile, RoundTripAndMismatch) {
  const ShareScheme scheme(3, 1);
  const auto dir = std::filesystem::temp_directory_path() / "vecmpc_preproc_test";
  std::filesystem::create_directories(dir);
  Dealer dealer(scheme, 10);
  const MaterialRequest r1{MaterialKind::kDoubleSharing, 6, 0, 0, 0};
  const MaterialRequest r2{MaterialKind::kCompareMask, 2, 29, 60, 0};
  std::vector<std::vector<MaterialBatch>> generated = {dealer.generate(r1), dealer.generate(r2)};
  for (PartyId p = 0; p < 3; ++p) {
    PreprocWriter w((dir / ("p" + std::to_string(p))).string(), p, scheme);
    for (auto& g : generated) w.append(g[p]);
  }
  FilePreprocSource src((dir / "p1").string(), 1, scheme);
  EXPECT_EQ(src.remaining_batches(), 2u);
  EXPECT_EQ(src.take(r1).data, generated[0][1].data);
  EXPECT_THROW(src.take(r1), MaterialError);  // out of step

  FilePreprocSource src2((dir / "p2").string(), 2, scheme);
  src2.take(r1);
  src2.take(r2);
  EXPECT_THROW(src2.take(r1), MaterialError);  // exhausted
  EXPECT_THROW(FilePreprocSource((dir / "p0").string(), 1, scheme), MaterialError);
  EXPECT_THROW(FilePreprocSource((dir / "p0").string(), 0, ShareScheme(5, 2)), MaterialError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace vecmpc
