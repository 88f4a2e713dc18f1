#pragma once

#include <map>
#include <optional>
#include <vector>

#include "trustlab/auth.hpp"
#include "trustlab/protocol_kind.hpp"
#include "trustlab/replica.hpp"

namespace trustlab {

struct ClientOptions {
  ProtocolKind kind = ProtocolKind::Pbft;
  SystemConfig cfg;
  bool all_n_client = false;
  SimTime retry_timeout = millis(8);
  SimTime max_retry_timeout = millis(500);
};

struct Completion {
  std::uint64_t request_id = 0;
  Seq seq = 0;
  View view = 0;
  std::vector<std::optional<std::uint64_t>> results;
  SimTime latency = 0;
};

/// Closed-loop client: at most one outstanding batch.
class ClientSession {
 public:
  ClientSession(ClientId id, ClientOptions opts, const KeyRing& keys);

  ClientId id() const { return id_; }
  bool idle() const { return !outstanding_.has_value(); }
  std::uint32_t completion_quorum() const { return quorum_; }
  View believed_view() const { return view_hint_; }
  const std::vector<Completion>& completions() const { return done_; }

  /// Assigns nonces and sends the Request to the believed primary.
  Effects submit(const std::vector<Operation>& ops, SimTime now);
  Effects on_response(const Response& r, SimTime now);
  Effects on_timer(const TimerEvent& ev, SimTime now);

 private:
  struct Reply {
    Seq seq = 0;
    View view = 0;
    std::map<std::uint64_t, std::optional<std::uint64_t>> results;
    friend bool operator==(const Reply&, const Reply&) = default;
  };
  struct Outstanding {
    MessagePtr request;
    std::uint64_t request_id = 0;
    std::size_t size = 0;
    Digest digest;
    SimTime submitted = 0;
    SimTime timeout = 0;
    std::uint64_t timer = 0;
    std::map<std::uint32_t, Reply> latest;
  };

  void arm_retry(SimTime now, Effects& fx);
  void note(Effects& fx, SimTime now, TraceKind k, View v, Seq s, const Digest& d, std::uint64_t a,
            std::uint64_t b) const;

  ClientId id_;
  ClientOptions opts_;
  const KeyRing& keys_;
  bool match_view_;
  std::uint32_t quorum_;
  std::uint64_t next_nonce_ = 0;
  std::uint64_t next_timer_ = 1;
  View view_hint_ = 0;
  std::optional<Outstanding> outstanding_;
  std::vector<Completion> done_;
};

}  // namespace trustlab
