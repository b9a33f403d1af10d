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

#include "vecmpc/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "vecmpc/errors.hpp"

namespace vecmpc {

PeerAddress parse_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ParameterError("address '" + text + "' is not host:port");
  }
  PeerAddress a;
  a.host = text.substr(0, colon);
  size_t used = 0;
  unsigned long port = 0;
  try {
    port = std::stoul(text.substr(colon + 1), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() - colon - 1 || port > 65535) {
    throw ParameterError("bad port in '" + text + "'");
  }
  a.port = static_cast<uint16_t>(port);
  return a;
}

namespace {

std::string errno_text() { return std::strerror(errno); }

bool read_exact(int fd, uint8_t* buf, size_t n) {
  while (n > 0) {
    const ssize_t r = ::recv(fd, buf, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    buf += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

sockaddr_in resolve(const PeerAddress& addr) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(addr.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw ProtocolError("cannot resolve " + addr.host + ": " + ::gai_strerror(rc));
  }
  sockaddr_in out = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  ::freeaddrinfo(res);
  out.sin_port = htons(addr.port);
  return out;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

}  // namespace

TcpTransport::TcpTransport(PartyId self, std::vector<PeerAddress> servers,
                           std::chrono::milliseconds connect_timeout)
    : self_(self), servers_(std::move(servers)), connect_timeout_(connect_timeout) {
  if (self_ > servers_.size()) throw ParameterError("party id beyond the server list");
  if (self_ == servers_.size()) return;  // client: dial out only

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ProtocolError("socket: " + errno_text());
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(servers_[self_]);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string err = errno_text();
    ::close(listen_fd_);
    throw ProtocolError("cannot listen on " + servers_[self_].host + ":" +
                        std::to_string(servers_[self_].port) + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  listen_port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpTransport::~TcpTransport() {
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  {
    std::lock_guard lock(mu_);
    for (auto& c : conns_) ::shutdown(c->fd, SHUT_RDWR);
  }
  for (auto& c : conns_) {
    if (c->reader.joinable()) c->reader.join();
    ::close(c->fd);
  }
  mailbox_.shutdown("transport closed");
}

void TcpTransport::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    if (rc <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_nodelay(fd);
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    conns_.push_back(std::make_unique<Conn>());
    Conn* c = conns_.back().get();
    c->fd = fd;
    c->reader = std::thread([this, c] { read_loop(c); });
  }
}

void TcpTransport::read_loop(Conn* conn) {
  std::vector<uint8_t> buf;
  while (!stopping_) {
    buf.resize(kEnvelopeHeaderBytes);
    if (!read_exact(conn->fd, buf.data(), kEnvelopeHeaderBytes)) return;
    const uint32_t len = get_u32(buf.data() + 16);
    if (len > kMaxPayloadBytes) return;
    buf.resize(kEnvelopeHeaderBytes + len);
    if (!read_exact(conn->fd, buf.data() + kEnvelopeHeaderBytes, len)) return;
    Envelope env;
    try {
      env = decode_envelope(buf);
    } catch (const FormatError&) {
      return;
    }
    if (env.kind == MessageKind::kHello) {
      add_route(env.sender, conn);
    } else if (env.kind == MessageKind::kControl) {
      mailbox_.abort_session(env.session_id,
                             "party " + std::to_string(env.sender) + " aborted the session");
    } else {
      mailbox_.deliver(std::move(env));
    }
  }
}

void TcpTransport::add_route(PartyId peer, Conn* conn) {
  std::lock_guard lock(mu_);
  routes_.emplace(peer, conn);
  routed_.notify_all();
}

void TcpTransport::write_envelope(Conn* conn, const std::vector<uint8_t>& wire) {
  std::lock_guard lock(conn->write_mu);
  size_t off = 0;
  while (off < wire.size()) {
    const ssize_t w = ::send(conn->fd, wire.data() + off, wire.size() - off, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("send failed: " + errno_text());
    }
    off += static_cast<size_t>(w);
  }
}

TcpTransport::Conn* TcpTransport::dial(PartyId to) {
  const sockaddr_in addr = resolve(servers_[to]);
  const auto deadline = std::chrono::steady_clock::now() + connect_timeout_;
  int fd = -1;
  for (;;) {
    fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ProtocolError("socket: " + errno_text());
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) break;
    ::close(fd);
    if (std::chrono::steady_clock::now() > deadline) {
      throw ProtocolError("cannot connect to party " + std::to_string(to) + " at " +
                          servers_[to].host + ":" + std::to_string(servers_[to].port));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  set_nodelay(fd);
  auto conn = std::make_unique<Conn>();
  conn->fd = fd;
  Envelope hello;
  hello.sender = self_;
  hello.kind = MessageKind::kHello;
  write_envelope(conn.get(), encode_envelope(hello));
  Conn* c = conn.get();
  c->reader = std::thread([this, c] { read_loop(c); });
  conns_.push_back(std::move(conn));
  return c;
}

TcpTransport::Conn* TcpTransport::route(PartyId to) {
  std::unique_lock lock(mu_);
  if (auto it = routes_.find(to); it != routes_.end()) return it->second;
  if (to < servers_.size()) {
    // Dialing under the lock keeps two senders from opening two links.
    Conn* c = dial(to);
    routes_.emplace(to, c);
    return c;
  }
  // A party that does not listen: wait for it to dial in.
  if (!routed_.wait_for(lock, connect_timeout_, [&] { return routes_.count(to) > 0; })) {
    throw ProtocolError("party " + std::to_string(to) + " never connected");
  }
  return routes_.at(to);
}

size_t TcpTransport::send(PartyId to, const Envelope& env) {
  if (to == self_) throw ProtocolError("send to self");
  const std::vector<uint8_t> wire = encode_envelope(env);
  write_envelope(route(to), wire);
  return wire.size();
}

Envelope TcpTransport::receive(uint64_t session, PartyId from, uint32_t round, MessageKind kind,
                               std::chrono::milliseconds timeout) {
  return mailbox_.take(session, from, round, kind, timeout);
}

std::optional<Envelope> TcpTransport::receive_any(MessageKind kind,
                                                  std::chrono::milliseconds timeout) {
  return mailbox_.take_any(kind, timeout);
}

void TcpTransport::abort_session(uint64_t session, const std::string& reason) {
  mailbox_.abort_session(session, reason);
  std::vector<Conn*> targets;
  {
    std::lock_guard lock(mu_);
    for (const auto& [peer, conn] : routes_) targets.push_back(conn);
  }
  Envelope ctl;
  ctl.session_id = session;
  ctl.sender = self_;
  ctl.kind = MessageKind::kControl;
  const auto wire = encode_envelope(ctl);
  for (Conn* c : targets) {
    try {
      write_envelope(c, wire);
    } catch (const ProtocolError&) {
      // Peer already gone.
    }
  }
}

}  // namespace vecmpc
