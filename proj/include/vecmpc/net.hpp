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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "vecmpc/shamir.hpp"

namespace vecmpc {

enum class MessageKind : uint16_t {
  kQueryHeader = 1,   // client -> server, public query parameters
  kQueryInput = 2,    // client -> server, shares of the query
  kMulOpen = 10,      // masked degree-2t opening (multiplication)
  kTruncOpen = 11,    // masked opening for truncation
  kCompareOpen = 12,  // masked opening for comparison
  kReveal = 20,       // opening of an unmasked value
  kResult = 30,       // server -> client result shares
  kControl = 40,      // session control (shutdown, errors)
  kHello = 41,        // TCP connection handshake
  kTest = 50,
};

const char* message_kind_name(MessageKind kind);

// Wire format, little-endian:
//   u64 session_id, u32 round, u16 sender, u16 kind, u32 len, payload[len]
// len is a multiple of 8 (packed field elements).
struct Envelope {
  uint64_t session_id = 0;
  uint32_t round = 0;
  PartyId sender = 0;
  MessageKind kind = MessageKind::kTest;
  std::vector<uint8_t> payload;
};

inline constexpr size_t kEnvelopeHeaderBytes = 20;
inline constexpr uint32_t kMaxPayloadBytes = 1u << 30;
// Round number used for results delivered to the client.
inline constexpr uint32_t kResultRound = 0xffffffffu;

std::vector<uint8_t> encode_envelope(const Envelope& env);
// Throws FormatError on length mismatch or a payload not made of 8-byte words.
Envelope decode_envelope(std::span<const uint8_t> bytes);

// Buffered inbox keyed by (session, sender, round, kind). Envelopes for
// future rounds are held until asked for.
class Mailbox {
 public:
  void deliver(Envelope env);
  Envelope take(uint64_t session, PartyId from, uint32_t round, MessageKind kind,
                std::chrono::milliseconds timeout);
  // Oldest pending envelope of `kind` from any sender and session.
  std::optional<Envelope> take_any(MessageKind kind, std::chrono::milliseconds timeout);
  // Wakes every waiter on the session with a ProtocolError.
  void abort_session(uint64_t session, const std::string& reason);
  // Fails every current and future wait.
  void shutdown(const std::string& reason);
  size_t pending() const;

 private:
  using Key = std::tuple<uint64_t, PartyId, uint32_t, uint16_t>;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<Key, Envelope> inbox_;
  std::map<uint64_t, std::string> aborted_;
  std::map<Key, bool> duplicates_;
  std::optional<std::string> shutdown_;
  uint64_t arrivals_ = 0;
  std::map<uint64_t, Key> arrival_order_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual PartyId self() const = 0;
  // Returns the number of bytes put on the wire.
  virtual size_t send(PartyId to, const Envelope& env) = 0;
  virtual Envelope receive(uint64_t session, PartyId from, uint32_t round, MessageKind kind,
                           std::chrono::milliseconds timeout) = 0;
  virtual std::optional<Envelope> receive_any(MessageKind kind,
                                              std::chrono::milliseconds timeout) = 0;
  // Fails pending receives of the session on every endpoint this transport
  // can reach.
  virtual void abort_session(uint64_t session, const std::string& reason) = 0;
};

// In-process channels between `endpoints` parties. Envelopes are encoded to
// wire bytes and decoded on delivery.
class LocalHub {
 public:
  explicit LocalHub(int endpoints);
  LocalHub(const LocalHub&) = delete;
  LocalHub& operator=(const LocalHub&) = delete;
  ~LocalHub();

  Transport& endpoint(PartyId id);
  int size() const { return static_cast<int>(boxes_.size()); }
  void abort_session(uint64_t session, const std::string& reason);

 private:
  class Endpoint;
  friend class Endpoint;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::vector<std::unique_ptr<Endpoint>> endpoints_;
};

struct TrafficStats {
  uint64_t bytes_sent = 0;
  uint64_t bytes_received = 0;
  uint64_t messages_sent = 0;
  uint64_t messages_received = 0;
  uint32_t rounds = 0;

  TrafficStats& operator+=(const TrafficStats& o);
};

struct TranscriptEntry {
  bool outgoing = false;
  uint32_t round = 0;
  PartyId peer = 0;
  MessageKind kind = MessageKind::kTest;
  std::vector<uint8_t> payload;
};

using Transcript = std::vector<TranscriptEntry>;

inline constexpr std::chrono::milliseconds kDefaultRoundTimeout{30000};

// One party's view of one session: round counter, traffic counters and an
// optional transcript.
class Session {
 public:
  Session(Transport& transport, uint64_t session_id,
          std::chrono::milliseconds timeout = kDefaultRoundTimeout, bool record = false);

  uint64_t id() const { return id_; }
  PartyId self() const { return transport_.self(); }
  uint32_t round() const { return round_; }
  void advance_round();

  void send(PartyId to, MessageKind kind, uint32_t round, std::vector<uint8_t> payload);
  std::vector<uint8_t> receive(PartyId from, MessageKind kind, uint32_t round);

  // Sends `payload` to every peer, collects every peer's payload for the
  // current round and advances the round. result[p] is party p's payload,
  // result[self] is `payload`.
  std::vector<std::vector<uint8_t>> broadcast_round(std::span<const PartyId> peers,
                                                    MessageKind kind,
                                                    const std::vector<uint8_t>& payload);

  const TrafficStats& stats() const { return stats_; }
  const Transcript& transcript() const { return transcript_; }
  bool recording() const { return record_; }
  void abort(const std::string& reason) { transport_.abort_session(id_, reason); }
  Transport& transport() { return transport_; }

 private:
  Transport& transport_;
  uint64_t id_;
  std::chrono::milliseconds timeout_;
  bool record_;
  uint32_t round_ = 1;
  TrafficStats stats_;
  Transcript transcript_;
};

}  // namespace vecmpc
