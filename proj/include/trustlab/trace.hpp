#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trustlab/digest.hpp"
#include "trustlab/protocol_kind.hpp"
#include "trustlab/trusted.hpp"
#include "trustlab/types.hpp"

namespace trustlab {

enum class TraceKind : std::uint8_t {
  Send,
  Deliver,
  Drop,
  Rejected,
  TcCall,
  Proposed,
  PrimaryCommitted,
  Committed,
  Executed,
  UndoApplied,
  ViewChangeStarted,
  NewViewInstalled,
  InvalidNewView,
  Reproposed,
  ConflictingReports,
  CheckpointStable,
  StateAdopted,
  Divergence,
  ClientSubmit,
  ClientResponse,
  ClientComplete,
  ClientTimeout,
  ForgedSend,
  Rollback,
  Crash,
  Abort,
};

std::string_view to_string(TraceKind k);
std::optional<TraceKind> parse_trace_kind(std::string_view s);

/// One record. Field meaning per kind is listed in docs/trace_format.md.
struct TraceEvent {
  SimTime time = 0;
  TraceKind kind = TraceKind::Send;
  Principal actor;
  Principal peer;
  View view = 0;
  Seq seq = 0;
  Digest digest;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::string text;
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Send/Deliver records dominate trace size; Summary drops them.
enum class TraceLevel : std::uint8_t { Summary, Full };

struct TraceHeader {
  std::string scenario;
  ProtocolKind kind = ProtocolKind::Pbft;
  std::uint32_t f = 0;
  std::uint32_t n = 0;
  std::uint64_t seed = 0;
  SimTime horizon = 0;
  SimTime gst = 0;
  std::vector<std::uint32_t> byzantine;
  Persistence persistence = Persistence::Persistent;
  std::uint32_t clients = 0;
  std::uint32_t batch_size = 1;
  SimTime access_latency = 0;
  TraceLevel level = TraceLevel::Full;
  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceEvent> events;

  bool aborted() const;
  bool is_byzantine(ReplicaId r) const;
  template <class F>
  void each(TraceKind k, F&& f) const {
    for (const auto& e : events) {
      if (e.kind == k) f(e);
    }
  }
};

std::vector<std::uint8_t> encode_trace(const Trace& t);
Trace decode_trace(std::span<const std::uint8_t> bytes);
void write_trace(const Trace& t, const std::filesystem::path& p);
Trace read_trace(const std::filesystem::path& p);

std::string render_event(const TraceEvent& e);
/// Header block followed by one line per event accepted by `keep`.
void render_trace(const Trace& t, std::ostream& os,
                  const std::function<bool(const TraceEvent&)>& keep = {});

}  // namespace trustlab
