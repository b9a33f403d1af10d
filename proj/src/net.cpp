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

#include "vecmpc/net.hpp"

#include <string>

namespace vecmpc {

const char* message_kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::kQueryHeader: return "query-header";
    case MessageKind::kQueryInput: return "query-input";
    case MessageKind::kMulOpen: return "mul-open";
    case MessageKind::kTruncOpen: return "trunc-open";
    case MessageKind::kCompareOpen: return "compare-open";
    case MessageKind::kReveal: return "reveal";
    case MessageKind::kResult: return "result";
    case MessageKind::kControl: return "control";
    case MessageKind::kHello: return "hello";
    case MessageKind::kTest: return "test";
  }
  return "unknown";
}

std::vector<uint8_t> encode_envelope(const Envelope& env) {
  if (env.payload.size() % kElementBytes != 0) {
    throw FormatError("envelope payload must be a multiple of 8 bytes");
  }
  if (env.payload.size() > kMaxPayloadBytes) throw FormatError("envelope payload too large");
  std::vector<uint8_t> out;
  out.reserve(kEnvelopeHeaderBytes + env.payload.size());
  put_u64(out, env.session_id);
  put_u32(out, env.round);
  put_u16(out, env.sender);
  put_u16(out, static_cast<uint16_t>(env.kind));
  put_u32(out, static_cast<uint32_t>(env.payload.size()));
  out.insert(out.end(), env.payload.begin(), env.payload.end());
  return out;
}

Envelope decode_envelope(std::span<const uint8_t> bytes) {
  if (bytes.size() < kEnvelopeHeaderBytes) throw FormatError("short envelope header");
  Envelope env;
  env.session_id = get_u64(bytes.data());
  env.round = get_u32(bytes.data() + 8);
  env.sender = get_u16(bytes.data() + 12);
  env.kind = static_cast<MessageKind>(get_u16(bytes.data() + 14));
  const uint32_t len = get_u32(bytes.data() + 16);
  if (len % kElementBytes != 0) throw FormatError("envelope payload not a multiple of 8");
  if (len > kMaxPayloadBytes) throw FormatError("envelope payload too large");
  if (bytes.size() != kEnvelopeHeaderBytes + len) {
    throw FormatError("envelope length field " + std::to_string(len) + " does not match " +
                      std::to_string(bytes.size() - kEnvelopeHeaderBytes) + " payload bytes");
  }
  env.payload.assign(bytes.begin() + kEnvelopeHeaderBytes, bytes.end());
  return env;
}

void Mailbox::deliver(Envelope env) {
  {
    std::lock_guard lock(mu_);
    Key key{env.session_id, env.sender, env.round, static_cast<uint16_t>(env.kind)};
    if (inbox_.count(key) != 0) {
      duplicates_[key] = true;
    } else {
      arrival_order_[arrivals_++] = key;
      inbox_.emplace(key, std::move(env));
    }
  }
  cv_.notify_all();
}

Envelope Mailbox::take(uint64_t session, PartyId from, uint32_t round, MessageKind kind,
                       std::chrono::milliseconds timeout) {
  const Key key{session, from, round, static_cast<uint16_t>(kind)};
  std::unique_lock lock(mu_);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (shutdown_) throw ProtocolError("transport shut down: " + *shutdown_);
    if (auto a = aborted_.find(session); a != aborted_.end()) {
      throw ProtocolError("session aborted: " + a->second);
    }
    if (duplicates_.count(key) != 0) {
      throw ProtocolError("duplicate envelope from party " + std::to_string(from) + " round " +
                          std::to_string(round));
    }
    if (auto it = inbox_.find(key); it != inbox_.end()) {
      Envelope env = std::move(it->second);
      inbox_.erase(it);
      for (auto o = arrival_order_.begin(); o != arrival_order_.end(); ++o) {
        if (o->second == key) {
          arrival_order_.erase(o);
          break;
        }
      }
      return env;
    }
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
      if (inbox_.count(key) != 0) continue;
      throw ProtocolError("deadlock: no " + std::string(message_kind_name(kind)) +
                          " message from party " + std::to_string(from) + " for round " +
                          std::to_string(round) + " of session " + std::to_string(session) +
                          " within " + std::to_string(timeout.count()) + " ms");
    }
  }
}

std::optional<Envelope> Mailbox::take_any(MessageKind kind, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (shutdown_) throw ProtocolError("transport shut down: " + *shutdown_);
    for (auto o = arrival_order_.begin(); o != arrival_order_.end(); ++o) {
      if (std::get<3>(o->second) == static_cast<uint16_t>(kind)) {
        auto it = inbox_.find(o->second);
        Envelope env = std::move(it->second);
        inbox_.erase(it);
        arrival_order_.erase(o);
        return env;
      }
    }
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) return std::nullopt;
  }
}

void Mailbox::abort_session(uint64_t session, const std::string& reason) {
  {
    std::lock_guard lock(mu_);
    aborted_.emplace(session, reason);
  }
  cv_.notify_all();
}

void Mailbox::shutdown(const std::string& reason) {
  {
    std::lock_guard lock(mu_);
    shutdown_ = reason;
  }
  cv_.notify_all();
}

size_t Mailbox::pending() const {
  std::lock_guard lock(mu_);
  return inbox_.size();
}

class LocalHub::Endpoint : public Transport {
 public:
  Endpoint(LocalHub& hub, PartyId id) : hub_(hub), id_(id) {}
  PartyId self() const override { return id_; }

  size_t send(PartyId to, const Envelope& env) override {
    if (to >= hub_.boxes_.size()) throw ProtocolError("send to unknown party");
    const std::vector<uint8_t> wire = encode_envelope(env);
    hub_.boxes_[to]->deliver(decode_envelope(wire));
    return wire.size();
  }

  Envelope receive(uint64_t session, PartyId from, uint32_t round, MessageKind kind,
                   std::chrono::milliseconds timeout) override {
    return hub_.boxes_[id_]->take(session, from, round, kind, timeout);
  }

  std::optional<Envelope> receive_any(MessageKind kind,
                                      std::chrono::milliseconds timeout) override {
    return hub_.boxes_[id_]->take_any(kind, timeout);
  }

  void abort_session(uint64_t session, const std::string& reason) override {
    hub_.abort_session(session, reason);
  }

 private:
  LocalHub& hub_;
  PartyId id_;
};

LocalHub::LocalHub(int endpoints) {
  if (endpoints < 1) throw ParameterError("hub needs at least one endpoint");
  for (int i = 0; i < endpoints; ++i) {
    boxes_.push_back(std::make_unique<Mailbox>());
    endpoints_.push_back(std::make_unique<Endpoint>(*this, static_cast<PartyId>(i)));
  }
}

LocalHub::~LocalHub() = default;

Transport& LocalHub::endpoint(PartyId id) {
  if (id >= endpoints_.size()) throw ProtocolError("unknown endpoint");
  return *endpoints_[id];
}

void LocalHub::abort_session(uint64_t session, const std::string& reason) {
  for (auto& box : boxes_) box->abort_session(session, reason);
}

TrafficStats& TrafficStats::operator+=(const TrafficStats& o) {
  bytes_sent += o.bytes_sent;
  bytes_received += o.bytes_received;
  messages_sent += o.messages_sent;
  messages_received += o.messages_received;
  rounds += o.rounds;
  return *this;
}

Session::Session(Transport& transport, uint64_t session_id, std::chrono::milliseconds timeout,
                 bool record)
    : transport_(transport), id_(session_id), timeout_(timeout), record_(record) {}

void Session::advance_round() {
  ++round_;
  ++stats_.rounds;
}

void Session::send(PartyId to, MessageKind kind, uint32_t round, std::vector<uint8_t> payload) {
  Envelope env{id_, round, self(), kind, std::move(payload)};
  stats_.bytes_sent += transport_.send(to, env);
  ++stats_.messages_sent;
  if (record_) transcript_.push_back({true, round, to, kind, std::move(env.payload)});
}

std::vector<uint8_t> Session::receive(PartyId from, MessageKind kind, uint32_t round) {
  Envelope env = transport_.receive(id_, from, round, kind, timeout_);
  stats_.bytes_received += kEnvelopeHeaderBytes + env.payload.size();
  ++stats_.messages_received;
  if (record_) transcript_.push_back({false, round, from, kind, env.payload});
  return std::move(env.payload);
}

std::vector<std::vector<uint8_t>> Session::broadcast_round(std::span<const PartyId> peers,
                                                           MessageKind kind,
                                                           const std::vector<uint8_t>& payload) {
  PartyId max_id = self();
  for (PartyId p : peers) max_id = std::max(max_id, p);
  std::vector<std::vector<uint8_t>> received(static_cast<size_t>(max_id) + 1);
  for (PartyId p : peers) {
    if (p != self()) send(p, kind, round_, payload);
  }
  for (PartyId p : peers) {
    if (p != self()) received[p] = receive(p, kind, round_);
  }
  received[self()] = payload;
  advance_round();
  return received;
}

}  // namespace vecmpc
