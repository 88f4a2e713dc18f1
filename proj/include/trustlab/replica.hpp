#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "trustlab/auth.hpp"
#include "trustlab/messages.hpp"
#include "trustlab/protocol_kind.hpp"
#include "trustlab/trace.hpp"
#include "trustlab/trusted.hpp"

namespace trustlab {

enum class TimerKind : std::uint8_t { ClientRetry, RequestForwarded, ViewChangeTimer, CheckpointTick };

struct TimerEvent {
  TimerKind kind = TimerKind::ViewChangeTimer;
  std::uint64_t id = 0;
  View view = 0;
  RequestKey request;
};

struct Outgoing {
  enum class To : std::uint8_t { Replica, AllReplicas, Client };
  To to = To::AllReplicas;
  std::uint32_t id = 0;
  MessagePtr msg;
  /// Earliest send time; later than the handling time after a trusted-component access.
  SimTime ready_at = 0;
};

struct TimerArm {
  TimerEvent ev;
  SimTime at = 0;
};

/// Everything a handler asks the outside world to do, plus trace records.
struct Effects {
  std::vector<Outgoing> out;
  std::vector<TimerArm> timers;
  std::vector<TraceEvent> notes;
};

struct ReplicaOptions {
  ProtocolKind kind = ProtocolKind::Pbft;
  SystemConfig cfg;
  Persistence persistence = Persistence::Persistent;
  SimTime access_latency = 0;
  std::uint32_t counter_lanes = 1;
  std::uint32_t pipeline_width = 64;
  SimTime view_change_timeout = millis(10);
  bool all_n_client = false;
};

/// Re-proposal decision derived from a set of ViewChange messages. Deterministic, so
/// every replica can recompute and check the primary's NewView.
struct NewViewPlan {
  Seq h = 0;
  std::vector<ReproposalEntry> entries;
  std::map<Seq, Batch> batches;
  std::vector<Seq> conflicts;
};

NewViewPlan plan_new_view(const std::vector<ViewChange>& vcs);

enum class SlotStatus : std::uint8_t { None, Preprepared, Prepared, Committed, Executed };

/// One replica's protocol state machine. Handlers are pure with respect to the outside
/// world: they mutate only this replica and return the effects to apply.
class Replica {
 public:
  Replica(ReplicaId id, ReplicaOptions opts, const KeyRing& keys);

  Effects on_message(const ProtocolMessage& msg, SimTime now);
  Effects on_timer(const TimerEvent& ev, SimTime now);

  ReplicaId id() const { return id_; }
  View view() const { return view_; }
  bool in_view_change() const { return vc_target_ > view_; }
  bool is_primary() const { return opts_.cfg.primary_of(view_) == id_ && !in_view_change(); }
  Seq watermark() const { return watermark_; }
  Seq stable_seq() const { return stable_seq_; }
  SlotStatus status(Seq s) const;
  std::size_t in_flight() const { return in_flight_.size(); }
  const std::map<std::uint64_t, std::uint64_t>& kv() const { return kv_; }
  std::optional<Digest> executed_digest(Seq s) const;
  const ReplicaOptions& options() const { return opts_; }

  TrustedComponent& tc() { return *tc_; }
  const TrustedComponent& tc() const { return *tc_; }

  /// A Preprepare bound by this replica's own component, for adversary scripts.
  Preprepare forge_preprepare(View v, Seq s, Batch batch, SimTime now, SimTime& ready_at);

  /// Digest of the complete replica state; equal fingerprints imply identical behaviour
  /// on any future input.
  Digest fingerprint() const;

  /// Digest of kv plus watermark, as carried in checkpoints.
  static Digest state_digest(const std::map<std::uint64_t, std::uint64_t>& kv, Seq watermark);

 private:
  struct Slot {
    std::optional<Preprepare> pp;
    std::map<std::uint32_t, Prepare> prepares;
    std::map<std::uint32_t, Digest> commits;
    std::set<std::uint32_t> acks;
    bool prepare_sent = false;
    bool prepared = false;
    bool commit_sent = false;
    bool committed = false;
    bool primary_done = false;
    std::vector<Preprepare> conflicts;
  };

  struct CachedReply {
    std::uint64_t request_id = 0;
    Seq seq = 0;
    std::vector<Response> responses;
  };

  struct UndoRecord {
    std::vector<std::pair<std::uint64_t, std::optional<std::uint64_t>>> kv;
    std::optional<std::pair<ClientId, std::optional<CachedReply>>> cache;
  };

  struct ExecRecord {
    Digest digest;
    View view = 0;
    RequestKey request;
    std::optional<UndoRecord> undo;
  };

  struct CheckpointVotes {
    std::map<Digest, std::set<std::uint32_t>> by_digest;
    std::map<Digest, Checkpoint> sample;
  };

  // Normal case.
  void on_request(const Request& m, SimTime now, Effects& fx);
  void on_preprepare(const Preprepare& m, SimTime now, Effects& fx);
  void accept_preprepare(const Preprepare& m, SimTime now, Effects& fx);
  void on_prepare(const Prepare& m, SimTime now, Effects& fx);
  void on_commit(const Commit& m, SimTime now, Effects& fx);
  void check_prepared(Seq s, SimTime now, Effects& fx);
  void emit_commits(SimTime now, Effects& fx);
  void check_committed(Seq s, SimTime now, Effects& fx);
  void mark_committed(Seq s, SimTime now, Effects& fx);
  void primary_done(Seq s, SimTime now, Effects& fx);
  void try_propose(SimTime now, Effects& fx);
  Preprepare bind(View v, Batch batch, Seq s, SimTime now, SimTime& ready_at);
  void try_execute(SimTime now, Effects& fx);
  void execute(Seq s, const Preprepare& pp, SimTime now, Effects& fx);
  void resend(const CachedReply& c, SimTime now, Effects& fx);
  void resend_seq(Seq s, const Digest& d, SimTime now, Effects& fx);
  void send_commit(Seq s, SimTime now, Effects& fx);
  void send_prepare(const Preprepare& pp, SimTime now, Effects& fx);
  void dispatch(const ProtocolMessage& msg, SimTime now, Effects& fx);
  void send_ack(Seq s, const Digest& d, SimTime now, Effects& fx);

  // Checkpoints.
  void maybe_checkpoint(SimTime now, Effects& fx);
  void on_checkpoint(const Checkpoint& m, SimTime now, Effects& fx);
  void make_stable(Seq s, const Digest& d, const Checkpoint& sample, SimTime now, Effects& fx);

  // View change (view_change.cpp).
  void start_view_change(View target, SimTime now, Effects& fx, std::string_view reason);
  void on_view_change(const ViewChange& m, SimTime now, Effects& fx);
  void maybe_assemble(View w, SimTime now, Effects& fx);
  void on_new_view(const NewView& m, SimTime now, Effects& fx);
  void install_view(const NewView& nv, Seq h, SimTime now, Effects& fx);
  void undo_from(Seq lowest, SimTime now, Effects& fx);
  void replay_future(SimTime now, Effects& fx);

  // Helpers.
  template <class M>
  MessagePtr sign(M m) const;
  void broadcast(MessagePtr m, SimTime ready, Effects& fx) const;
  void unicast(ReplicaId to, MessagePtr m, SimTime ready, Effects& fx) const;
  void to_client(ClientId c, MessagePtr m, SimTime ready, Effects& fx) const;
  void arm(TimerEvent ev, SimTime at, Effects& fx);
  void note(Effects& fx, SimTime now, TraceKind k, View v, Seq s, const Digest& d = {},
            std::uint64_t a = 0, std::uint64_t b = 0, std::string text = {}) const;
  bool ordered_backups() const;
  bool counter_kind() const;

  ReplicaId id_;
  ReplicaOptions opts_;
  const ProtocolTraits& traits_;
  Quorums quorums_;
  const KeyRing& keys_;
  std::unique_ptr<TrustedComponent> tc_;

  View view_ = 0;
  View vc_target_ = 0;
  std::uint64_t own_counter_ = 0;           // counter this replica binds its own votes with
  std::map<View, std::uint64_t> primary_counter_;  // counter id backing each view's proposals
  std::map<Seq, Slot> slots_;
  Seq next_ordered_ = 1;
  Seq next_commit_ = 1;
  std::map<Seq, Preprepare> reorder_;
  std::set<RequestKey> seen_in_view_;

  // Primary.
  std::deque<Request> pending_;
  std::set<RequestKey> queued_;
  std::optional<Preprepare> prebound_;
  SimTime prebound_ready_ = 0;
  std::set<Seq> in_flight_;
  Seq next_seq_ = 1;

  // Execution.
  std::map<std::uint64_t, std::uint64_t> kv_;
  Seq watermark_ = 0;
  std::map<Seq, ExecRecord> exec_log_;
  std::map<ClientId, CachedReply> reply_cache_;

  // Checkpoints.
  Seq stable_seq_ = 0;
  std::map<Seq, Digest> own_checkpoints_;
  std::map<Seq, CheckpointVotes> checkpoint_votes_;

  // View change.
  std::map<Seq, Preprepare> carried_;
  std::map<Seq, CommitCert> certs_;
  std::map<View, std::map<std::uint32_t, ViewChange>> vcs_;
  std::set<View> new_view_sent_;
  MessagePtr last_new_view_;
  std::vector<ProtocolMessage> future_;
  std::uint32_t escalations_ = 0;

  // Timers.
  std::uint64_t next_timer_id_ = 1;
  std::set<std::uint64_t> live_timers_;
  std::map<RequestKey, std::uint64_t> forward_timers_;
};

}  // namespace trustlab
