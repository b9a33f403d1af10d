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

#include <random>
#include <thread>

#include "vecmpc/tcp.hpp"

namespace vecmpc {
namespace {

std::vector<PeerAddress> loopback(int n) {
  static std::mt19937 rng(std::random_device{}());
  const uint16_t base = static_cast<uint16_t>(20000 + rng() % 30000);
  std::vector<PeerAddress> out;
  for (int i = 0; i < n; ++i) out.push_back({"127.0.0.1", static_cast<uint16_t>(base + i)});
  return out;
}

TEST(Tcp, ParseAddress) {
  const auto a = parse_address("localhost:9000");
  EXPECT_EQ(a.host, "localhost");
  EXPECT_EQ(a.port, 9000);
  EXPECT_THROW(parse_address("localhost"), ParameterError);
  EXPECT_THROW(parse_address("h:70000"), ParameterError);
  EXPECT_THROW(parse_address("h:12x"), ParameterError);
}

TEST(Tcp, BroadcastRoundsAndClientReplies) {
  const auto addrs = loopback(3);
  std::vector<std::unique_ptr<TcpTransport>> servers;
  for (int p = 0; p < 3; ++p) {
    servers.push_back(std::make_unique<TcpTransport>(static_cast<PartyId>(p), addrs));
  }
  TcpTransport client(3, addrs);
  const std::vector<PartyId> peers = {0, 1, 2};
  std::vector<std::thread> threads;
  std::vector<std::vector<std::vector<uint8_t>>> got(3);
  for (int p = 0; p < 3; ++p) {
    threads.emplace_back([&, p] {
      Session s(*servers[p], 7);
      const auto hello = s.receive(3, MessageKind::kQueryInput, 0);
      for (int r = 0; r < 5; ++r) {
        std::vector<uint8_t> payload(8 * (r + 1), static_cast<uint8_t>(p * 10 + r));
        got[p] = s.broadcast_round(peers, MessageKind::kMulOpen, payload);
      }
      s.send(3, MessageKind::kResult, kResultRound, hello);
    });
  }
  Session cs(client, 7);
  for (PartyId p = 0; p < 3; ++p) {
    cs.send(p, MessageKind::kQueryInput, 0, std::vector<uint8_t>(8, static_cast<uint8_t>(p)));
  }
  for (PartyId p = 0; p < 3; ++p) {
    EXPECT_EQ(cs.receive(p, MessageKind::kResult, kResultRound),
              std::vector<uint8_t>(8, static_cast<uint8_t>(p)));
  }
  for (auto& t : threads) t.join();
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) {
      EXPECT_EQ(got[p][q], std::vector<uint8_t>(40, static_cast<uint8_t>(q * 10 + 4)));
    }
  }
}

TEST(Tcp, AbortReachesPeers) {
  const auto addrs = loopback(3);
  TcpTransport a(0, addrs), b(1, addrs), c(2, addrs);
  // Establish links both ways.
  Session sa(a, 3), sb(b, 3);
  sa.send(1, MessageKind::kTest, 1, {});
  sb.receive(0, MessageKind::kTest, 1);
  std::thread waiter([&] {
    EXPECT_THROW(b.receive(3, 0, 9, MessageKind::kTest, std::chrono::seconds(20)), ProtocolError);
  });
  a.abort_session(3, "test");
  waiter.join();
}

TEST(Tcp, ReceiveTimesOut) {
  const auto addrs = loopback(3);
  TcpTransport a(0, addrs);
  EXPECT_THROW(a.receive(1, 1, 1, MessageKind::kTest, std::chrono::milliseconds(100)),
               ProtocolError);
}

}  // namespace
}  // namespace vecmpc
