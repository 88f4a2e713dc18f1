#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <unordered_map>
#include <string>
#include <vector>

#include "trustlab/client.hpp"
#include "trustlab/replica.hpp"
#include "trustlab/trace.hpp"
#include "trustlab/workload.hpp"

namespace trustlab {

inline constexpr SimTime kForever = std::numeric_limits<SimTime>::max() / 4;

/// Matches messages by sender, receiver and kind. An unset field matches anything.
struct MessageFilter {
  std::optional<std::set<Principal>> from;
  std::optional<std::set<Principal>> to;
  std::optional<std::set<MessageKind>> kinds;

  bool matches(Principal f, Principal t, MessageKind k) const;
  static std::set<Principal> replicas(const std::vector<std::uint32_t>& ids);
};

struct AdversaryAction {
  enum class Kind : std::uint8_t {
    DelayMatching,  // hold matching messages until `until` (capped at gst)
    DropMatching,   // drop matching messages sent before `until`
    SendForged,     // re-sign `message` as its byzantine signer and send to `targets`
    ProposeAs,      // bind `batch` with `replica`'s own component and send to `targets`
    SnapshotTC,
    Rollback,
    Crash,
    CrashOnProposal,  // `replica` crashes while broadcasting its proposal for `seq`; only
                      // `targets` receive that proposal
  };
  Kind kind = Kind::DropMatching;
  SimTime at = 0;
  MessageFilter filter;
  SimTime until = kForever;
  ReplicaId replica;
  std::string label;
  View view = 0;
  Seq seq = 0;
  Batch batch;
  std::vector<ReplicaId> targets;
  std::shared_ptr<const ProtocolMessage> message;
};

struct AdversaryScript {
  std::vector<std::uint32_t> byzantine;
  std::vector<AdversaryAction> actions;
};

struct NetworkModel {
  SimTime base_delay = millis(1);
  SimTime jitter = 0;
  SimTime gst = 0;
  /// Optional per-ordered-pair replica delays, overriding base_delay.
  std::vector<std::vector<SimTime>> matrix;
  /// One-way client to replica delay; base_delay when unset.
  std::optional<SimTime> client_delay;
};

struct CostModel {
  SimTime per_message = 0;
  SimTime per_verification = 0;
};

struct SimConfig {
  std::string scenario = "custom";
  ProtocolKind kind = ProtocolKind::Pbft;
  SystemConfig cfg;
  Persistence persistence = Persistence::Persistent;
  SimTime access_latency = 0;
  std::uint32_t counter_lanes = 1;
  std::uint32_t pipeline_width = 64;
  NetworkModel net;
  CostModel cost;
  SimTime horizon = millis(1000);
  std::uint64_t seed = 1;
  std::uint32_t clients = 1;
  std::uint64_t txns = 50;  // split evenly over clients, rounded up to whole batches
  Workload workload;
  std::optional<SimTime> view_change_timeout;
  std::optional<SimTime> client_retry;
  bool all_n_client = false;
  AdversaryScript adversary;
  TraceLevel level = TraceLevel::Full;
  AuthMode auth = AuthMode::Simulated;
  /// First client id; clients are numbered consecutively from here.
  std::uint32_t first_client = 0;
};

/// One-way delay bound: base delay plus maximal jitter (largest matrix entry if present).
SimTime delay_bound(const NetworkModel& net);

class Simulator {
 public:
  explicit Simulator(SimConfig cfg);
  ~Simulator();

  /// Runs to quiescence or the horizon. Deterministic in the configuration.
  Trace run();

  Replica& replica(std::uint32_t i) { return *replicas_.at(i); }
  ClientSession& client(std::uint32_t i) { return *clients_.at(i); }
  const SimConfig& config() const { return cfg_; }
  const KeyRing& keys() const { return *keys_; }

 private:
  enum class EvType : std::uint8_t { Deliver, ReplicaTimer, ClientTimer, Adversary };
  struct Event {
    SimTime at = 0;
    std::uint64_t tie = 0;
    EvType type = EvType::Deliver;
    Principal from;
    Principal to;
    MessagePtr msg;
    TimerEvent timer;
    std::size_t action = 0;
    bool charged = false;
    bool survives_crash = false;  // already on the wire when its sender crashed
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.tie > b.tie;
    }
  };

  void push(Event e);
  void apply(Principal actor, Effects fx, SimTime now);
  /// Applies an armed CrashOnProposal to `o`; true when the sender just crashed.
  bool cut_proposal(Principal actor, const Outgoing& o, SimTime at);
  void send(Principal from, Principal to, const MessagePtr& m, SimTime t, bool forged,
            bool survives_crash = false);
  void deliver(Event& e);
  void adversary(const AdversaryAction& a, SimTime now);
  void client_next(std::uint32_t c, SimTime now);
  void record(TraceEvent e);
  void record_msg(TraceKind k, SimTime t, Principal from, Principal to, const ProtocolMessage& m);
  void abort(SimTime now, std::string why);
  bool byzantine(Principal p) const;
  SimTime link_delay(Principal from, Principal to);

  SimConfig cfg_;
  std::unique_ptr<KeyRing> keys_;
  std::vector<std::unique_ptr<Replica>> replicas_;
  std::vector<std::unique_ptr<ClientSession>> clients_;
  std::vector<WorkloadStream> streams_;
  std::vector<std::uint64_t> batches_left_;
  std::vector<bool> crashed_;
  std::vector<std::size_t> cuts_;  // armed CrashOnProposal actions
  std::vector<SimTime> cpu_free_;
  std::set<std::uint32_t> byzantine_;
  std::map<std::string, TcSnapshot> snapshots_;
  std::vector<std::size_t> active_filters_;
  std::unordered_map<Digest, Batch> batch_seen_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t tie_ = 0;
  std::mt19937_64 rng_;
  Trace trace_;
  bool stopped_ = false;
};

Trace simulate(const SimConfig& cfg);

}  // namespace trustlab
