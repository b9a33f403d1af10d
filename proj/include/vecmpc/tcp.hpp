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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "vecmpc/net.hpp"

namespace vecmpc {

struct PeerAddress {
  std::string host;
  uint16_t port = 0;
};

// "host:port".
PeerAddress parse_address(const std::string& text);

// Envelopes over TCP. Servers 0..n-1 listen on their address; anyone else
// (the client, id n) only dials out. A connection opens with a kHello
// envelope naming the dialer and is then used in both directions. Peers
// that do not listen are reached over the connection they opened.
class TcpTransport : public Transport {
 public:
  TcpTransport(PartyId self, std::vector<PeerAddress> servers,
               std::chrono::milliseconds connect_timeout = std::chrono::seconds(10));
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;
  ~TcpTransport() override;

  PartyId self() const override { return self_; }
  size_t send(PartyId to, const Envelope& env) override;
  Envelope receive(uint64_t session, PartyId from, uint32_t round, MessageKind kind,
                   std::chrono::milliseconds timeout) override;
  std::optional<Envelope> receive_any(MessageKind kind, std::chrono::milliseconds timeout) override;
  // Aborts locally and tells every connected peer.
  void abort_session(uint64_t session, const std::string& reason) override;

  // Bound port (useful when the configured port was 0).
  uint16_t listen_port() const { return listen_port_; }

 private:
  struct Conn {
    int fd = -1;
    std::mutex write_mu;
    std::thread reader;
  };

  void accept_loop();
  void read_loop(Conn* conn);
  Conn* route(PartyId to);
  Conn* dial(PartyId to);
  void add_route(PartyId peer, Conn* conn);
  static void write_envelope(Conn* conn, const std::vector<uint8_t>& wire);

  PartyId self_;
  std::vector<PeerAddress> servers_;
  std::chrono::milliseconds connect_timeout_;
  Mailbox mailbox_;
  int listen_fd_ = -1;
  uint16_t listen_port_ = 0;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};

  std::mutex mu_;
  std::condition_variable routed_;
  std::vector<std::unique_ptr<Conn>> conns_;
  std::map<PartyId, Conn*> routes_;
};

}  // namespace vecmpc
