#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "trustlab/auth.hpp"
#include "trustlab/messages.hpp"

namespace trustlab {

enum class Persistence : std::uint8_t { Persistent, Volatile };

std::string_view to_string(Persistence p);
std::optional<Persistence> parse_persistence(std::string_view s);

class TrustedError : public std::runtime_error {
 public:
  enum class Code : std::uint8_t { UnknownCounter, StaleSlot, RollbackForbidden };
  TrustedError(Code c, const std::string& what) : std::runtime_error(what), code_(c) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Result of a component access. `ready_at` is when the caller may continue.
struct TcCall {
  std::uint64_t q = 0;
  std::uint64_t k = 0;
  Attestation att;
  SimTime ready_at = 0;
};

enum class TcOp : std::uint8_t { AppendF, Create, LogAppend, Rollback };
std::string_view to_string(TcOp op);

/// Everything an adversary can capture and later restore.
struct TcSnapshot {
  struct Log {
    std::uint64_t last = 0;
    std::map<std::uint64_t, Digest> slots;
  };
  std::map<std::uint64_t, std::uint64_t> counters;
  std::map<std::uint64_t, Log> logs;
  std::uint64_t next_counter_id = 0;
};

/// Attested monotonic counters and append-only logs with a configurable access cost.
///
/// Each access occupies one of `lanes` service lanes for `access_latency`; a caller
/// arriving while every lane is busy waits for the earliest free lane.
class TrustedComponent {
 public:
  using Observer = std::function<void(TcOp, const Attestation&, SimTime)>;

  TrustedComponent(ComponentId id, Persistence persistence, SimTime access_latency,
                   std::uint32_t lanes, const KeyRing& keys);

  ComponentId id() const { return id_; }
  Persistence persistence() const { return persistence_; }
  SimTime access_latency() const { return latency_; }

  TcCall append_f(std::uint64_t q, const Digest& x, SimTime now);
  TcCall create(std::uint64_t k0, SimTime now);
  TcCall log_append(std::uint64_t q, std::optional<std::uint64_t> k_new, const Digest& x,
                    SimTime now);
  std::optional<Attestation> log_lookup(std::uint64_t q, std::uint64_t k) const;

  /// Logs come into existence on first open; opening twice is harmless.
  void open_log(std::uint64_t q);
  bool has_counter(std::uint64_t q) const { return state_.counters.count(q) > 0; }
  std::optional<std::uint64_t> counter_value(std::uint64_t q) const;
  std::optional<std::uint64_t> log_last(std::uint64_t q) const;

  TcSnapshot snapshot() const { return state_; }
  void adversary_rollback(const TcSnapshot& to, SimTime now);

  /// Number of accesses made through append_f, create and log_append.
  std::uint64_t calls() const { return calls_; }
  /// Digest of everything that influences future behaviour.
  Digest fingerprint() const;
  void set_observer(Observer o) { observer_ = std::move(o); }

 private:
  SimTime charge(SimTime now);
  Attestation attest(AttestKind kind, std::uint64_t q, std::uint64_t k,
                     std::optional<Digest> x) const;
  void notify(TcOp op, const Attestation& a, SimTime at) const;

  ComponentId id_;
  Persistence persistence_;
  SimTime latency_;
  std::vector<SimTime> lane_free_;
  const KeyRing& keys_;
  TcSnapshot state_;
  std::uint64_t calls_ = 0;
  Observer observer_;
};

/// True iff the attestation was issued by a registered component and its tag verifies.
bool verify_attestation(const Attestation& att, const KeyRing& keys);

}  // namespace trustlab
