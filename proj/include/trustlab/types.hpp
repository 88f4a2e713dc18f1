#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace trustlab {

/// Virtual time in integer microseconds.
using SimTime = std::int64_t;
using View = std::uint64_t;
using Seq = std::uint64_t;

constexpr SimTime millis(double ms) { return static_cast<SimTime>(ms * 1000.0); }

struct ReplicaId {
  std::uint32_t index = 0;
  friend auto operator<=>(const ReplicaId&, const ReplicaId&) = default;
};

struct ClientId {
  std::uint32_t value = 0;
  friend auto operator<=>(const ClientId&, const ClientId&) = default;

  /// Issuer of the no-op batches a new primary uses to fill gaps.
  static constexpr ClientId system() { return ClientId{0xffffffffu}; }
  bool is_system() const { return value == 0xffffffffu; }
};

using ComponentId = std::uint32_t;

/// Anyone who can sign: a replica, a client or a trusted component.
struct Principal {
  enum class Kind : std::uint8_t { Replica, Client, Trusted };
  Kind kind = Kind::Replica;
  std::uint32_t id = 0;

  static Principal replica(ReplicaId r) { return {Kind::Replica, r.index}; }
  static Principal client(ClientId c) { return {Kind::Client, c.value}; }
  static Principal trusted(ComponentId c) { return {Kind::Trusted, c}; }

  friend auto operator<=>(const Principal&, const Principal&) = default;
};

std::string to_string(const Principal& p);

enum class Regime : std::uint8_t { TwoFPlusOne, ThreeFPlusOne };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemConfig {
  std::uint32_t f = 1;
  std::uint32_t n = 4;
  Regime regime = Regime::ThreeFPlusOne;
  std::uint32_t batch_size = 1;
  Seq checkpoint_period = 64;

  static SystemConfig make(std::uint32_t f, Regime regime, std::uint32_t batch_size = 1,
                           Seq checkpoint_period = 64);

  /// Throws ConfigError when n does not match the regime.
  void validate() const;

  ReplicaId primary_of(View v) const { return ReplicaId{static_cast<std::uint32_t>(v % n)}; }
};

struct Put {
  std::uint64_t key = 0;
  std::uint64_t value = 0;
  friend bool operator==(const Put&, const Put&) = default;
};
struct Get {
  std::uint64_t key = 0;
  friend bool operator==(const Get&, const Get&) = default;
};
struct Noop {
  friend bool operator==(const Noop&, const Noop&) = default;
};
using Operation = std::variant<Put, Get, Noop>;

struct TxnId {
  ClientId client;
  std::uint64_t nonce = 0;
  friend auto operator<=>(const TxnId&, const TxnId&) = default;
};

struct Transaction {
  ClientId client;
  std::uint64_t nonce = 0;
  Operation op = Noop{};

  TxnId id() const { return {client, nonce}; }
  friend bool operator==(const Transaction&, const Transaction&) = default;
};

using Batch = std::vector<Transaction>;

/// A client request is identified by its client and the nonce of its first transaction.
struct RequestKey {
  ClientId client;
  std::uint64_t request_id = 0;
  friend auto operator<=>(const RequestKey&, const RequestKey&) = default;
};

/// The gap filler proposed by a new primary for sequence number `seq`.
Batch noop_batch(Seq seq);
bool is_noop_batch(const Batch& b);

}  // namespace trustlab
