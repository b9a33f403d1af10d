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

#include <cmath>
#include <random>

#include "mpc_harness.hpp"
#include "vecmpc/cluster.hpp"
#include "vecmpc/mpc.hpp"

namespace vecmpc {
namespace {

using testing::Harness;
using testing::kCodec;
using testing::kUlp;
using testing::encode;

class MpcParties : public ::testing::TestWithParam<int> {};

TEST_P(MpcParties, MulFixedExamples) {
  Harness h(GetParam());
  const auto out = h.run({encode({2.0, 1.5, -3.0, 0.0}), encode({3.0, 1.5, 0.5, 7.0})},
                         [](PartyContext& ctx, auto& in) { return mul_fixed(ctx, in[0], in[1]); });
  EXPECT_NEAR(kCodec.decode(out[0]), 6.0, kUlp);
  EXPECT_NEAR(kCodec.decode(out[1]), 2.25, 2 * kUlp);
  EXPECT_NEAR(kCodec.decode(out[2]), -1.5, kUlp);
  EXPECT_NEAR(kCodec.decode(out[3]), 0.0, kUlp);
}

TEST_P(MpcParties, MulFixedRandomPairs) {
  Harness h(GetParam(), 2);
  std::mt19937_64 rng(GetParam());
  std::uniform_real_distribution<double> U(-4, 4);
  std::vector<double> a(10000), b(10000);
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = U(rng);
    b[i] = U(rng);
  }
  const auto ea = encode(a), eb = encode(b);
  const auto out = h.run({ea, eb}, [](PartyContext& ctx, auto& in) { return mul_fixed(ctx, in[0], in[1]); });
  double worst = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    // Compare against the product of the encoded operands (exact in doubles).
    const double want = kCodec.decode(ea[i]) * kCodec.decode(eb[i]);
    worst = std::max(worst, std::abs(kCodec.decode(out[i]) - want));
  }
  EXPECT_LT(worst, 2 * kUlp);
}

TEST_P(MpcParties, IntegerMulIsExact) {
  Harness h(GetParam(), 3);
  std::vector<Fp> a, b;
  Prg prg(5);
  for (int i = 0; i < 1000; ++i) {
    a.push_back(prg.next_field());
    b.push_back(prg.next_field());
  }
  const auto out = h.run({a, b}, [](PartyContext& ctx, auto& in) { return mul(ctx, in[0], in[1]); });
  for (size_t i = 0; i < a.size(); ++i) ASSERT_EQ(out[i], a[i] * b[i]);
}

TEST_P(MpcParties, SumProdExamples) {
  Harness h(GetParam(), 4);
  const std::vector<double> y = {0.5, -1.25, 3.0, 2.0, -0.75, 0.125, 1.0, -2.0};
  std::vector<double> onehot(8, 0.0);
  onehot[2] = 1.0;
  std::vector<double> zero(8, 0.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N01(0, 1);
  std::vector<double> x(8);
  for (auto& v : x) v = N01(rng);
  const auto out = h.run({encode(onehot), encode(zero), encode(x), encode(y)},
                         [](PartyContext& ctx, auto& in) {
                           return std::vector<Fp>{sum_prod(ctx, in[0], in[3]),
                                                  sum_prod(ctx, in[1], in[3]),
                                                  sum_prod(ctx, in[2], in[3])};
                         });
  EXPECT_NEAR(kCodec.decode(out[0]), 3.0, kUlp);
  EXPECT_NEAR(kCodec.decode(out[1]), 0.0, kUlp);
  double want = 0;
  for (int i = 0; i < 8; ++i) want += x[i] * y[i];
  EXPECT_NEAR(kCodec.decode(out[2]), want, kUlp * 8);
}

TEST_P(MpcParties, TruncateWithinOneUlp) {
  Harness h(GetParam(), 5);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int64_t> V(-(int64_t{1} << 43), int64_t{1} << 43);
  std::vector<int64_t> raw(10000);
  std::vector<Fp> in;
  for (auto& v : raw) {
    v = V(rng);
    in.push_back(Fp::from_signed(v));
  }
  raw[0] = 0;
  in[0] = Fp(0);
  raw[1] = int64_t{1} << 32;  // 1.0 at 2f precision
  in[1] = Fp(uint64_t{1} << 32);
  const auto out = h.run({in}, [](PartyContext& ctx, auto& i) { return truncate(ctx, i[0]); });
  int within = 0;
  for (size_t i = 0; i < raw.size(); ++i) {
    // floor division oracle
    const int64_t floor_shift = raw[i] >> 16;
    const int64_t got = out[i].to_signed();
    if (got == floor_shift || got == floor_shift + 1) ++within;
  }
  EXPECT_GE(within, 9990);
  EXPECT_LE(std::abs(out[0].to_signed()), 1);
  EXPECT_LE(std::abs(out[1].to_signed() - 65536), 1);
}

TEST_P(MpcParties, LessThanZeroMatchesSign) {
  Harness h(GetParam(), 6);
  std::mt19937_64 rng(GetParam() * 17);
  const int64_t bound = int64_t{1} << 29;  // |a| < 2^29 in encoded units
  std::uniform_int_distribution<int64_t> V(-bound, bound - 1);
  std::vector<int64_t> raw = {kCodec.encode(-1.0).to_signed(), 0, 1, -1, bound - 1, -bound};
  while (raw.size() < 10000) raw.push_back(V(rng));
  std::vector<Fp> in;
  for (auto v : raw) in.push_back(Fp::from_signed(v));
  const auto out = h.run({in}, [](PartyContext& ctx, auto& i) { return less_than_zero(ctx, i[0]); });
  for (size_t i = 0; i < raw.size(); ++i) {
    ASSERT_EQ(out[i].value(), raw[i] < 0 ? 1u : 0u) << raw[i];
  }
}

TEST_P(MpcParties, GreaterOrEqual) {
  Harness h(GetParam(), 7);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2000, 2000);
  std::vector<double> a = {5.0, 2.0, -1.0}, b = {5.0, 3.0, -1.0 - kUlp};
  while (a.size() < 2000) {
    a.push_back(U(rng));
    b.push_back(a.size() % 3 == 0 ? a.back() : U(rng));
  }
  const auto ea = encode(a), eb = encode(b);
  const auto out = h.run({ea, eb}, [](PartyContext& ctx, auto& i) { return ge(ctx, i[0], i[1]); });
  EXPECT_EQ(out[0], Fp(1));
  EXPECT_EQ(out[1], Fp(0));
  EXPECT_EQ(out[2], Fp(1));
  for (size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(out[i].value(), ea[i].to_signed() >= eb[i].to_signed() ? 1u : 0u);
  }
}

INSTANTIATE_TEST_SUITE_P(Parties, MpcParties, ::testing::Values(3, 5, 7));

TEST(Mpc, SumProdTrafficIndependentOfLength) {
  std::vector<uint64_t> bytes;
  for (size_t d : {64, 1024, 8192}) {
    Harness h(3, d);
    std::vector<Fp> x(d), y(d);
    for (size_t i = 0; i < d; ++i) {
      x[i] = kCodec.encode(0.01 * static_cast<double>(i % 7));
      y[i] = kCodec.encode(0.02);
    }
    ClusterRun run;
    h.run({x, y}, [](PartyContext& ctx, auto& in) { return std::vector<Fp>{sum_prod(ctx, in[0], in[1])}; },
          &run);
    bytes.push_back(run.stats[0].bytes_sent);
    EXPECT_EQ(run.stats[0].rounds, 1u);
  }
  EXPECT_EQ(bytes[0], bytes[1]);
  EXPECT_EQ(bytes[1], bytes[2]);
}

TEST(Mpc, SumProdRejectsOverlongVectors) {
  Harness h(3);
  std::vector<Fp> x(8193, Fp(1));
  EXPECT_THROW(h.run({x, x}, [](PartyContext& ctx, auto& in) {
                 return std::vector<Fp>{sum_prod(ctx, in[0], in[1])};
               }),
               ParameterError);
}

TEST(Mpc, BitLessThanExhaustiveSmall) {
  // All (c, r) pairs for 5-bit values.
  Harness h(3);
  const int bits = 5;
  std::vector<uint64_t> cs;
  std::vector<Fp> rbits;
  std::vector<bool> want;
  for (uint64_t c = 0; c < 32; ++c) {
    for (uint64_t r = 0; r < 32; ++r) {
      cs.push_back(c);
      for (int b = 0; b < bits; ++b) rbits.push_back(Fp((r >> b) & 1));
      want.push_back(c < r);
    }
  }
  const auto out = h.run({rbits}, [&](PartyContext& ctx, auto& in) {
    return bit_less_than(ctx, cs, in[0], bits);
  });
  for (size_t i = 0; i < want.size(); ++i) ASSERT_EQ(out[i].value(), want[i] ? 1u : 0u) << i;
}

}  // namespace
}  // namespace vecmpc
