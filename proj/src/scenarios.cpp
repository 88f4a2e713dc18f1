#include "trustlab/scenarios.hpp"

#include <algorithm>
#include <random>

namespace trustlab {

namespace {

constexpr ClientId kAttackClient{1000000};
constexpr SimTime kAttackAt = millis(50);

std::vector<std::uint32_t> range(std::uint32_t from, std::uint32_t to) {
  std::vector<std::uint32_t> out;
  for (auto i = from; i < to; ++i) out.push_back(i);
  return out;
}

SimConfig base(std::string_view name, ProtocolKind kind, const ScenarioOptions& o,
               std::uint64_t default_txns, SimTime default_horizon) {
  SimConfig c;
  c.scenario = std::string(name);
  c.kind = kind;
  c.cfg = config_for(kind, o.f, o.batch);
  c.persistence = o.persistence;
  c.access_latency = o.access_latency;
  c.counter_lanes = o.counter_lanes;
  c.pipeline_width = o.pipeline_width;
  c.net.base_delay = o.rtt / 2;
  c.net.jitter = o.jitter;
  c.horizon = o.horizon.value_or(default_horizon);
  c.seed = o.seed;
  c.clients = o.clients;
  c.txns = o.txns.value_or(default_txns);
  c.workload.seed = o.seed;
  c.level = o.level;
  c.auth = o.auth;
  return c;
}

std::set<Principal> clients_of(const SimConfig& c) {
  std::set<Principal> out;
  for (std::uint32_t i = 0; i < c.clients; ++i) {
    out.insert(Principal::client(ClientId{c.first_client + i}));
  }
  return out;
}

AdversaryAction filter_action(AdversaryAction::Kind k, const std::vector<std::uint32_t>& from,
                              std::set<Principal> to, std::optional<std::set<MessageKind>> kinds) {
  AdversaryAction a;
  a.kind = k;
  a.filter.from = MessageFilter::replicas(from);
  a.filter.to = std::move(to);
  a.filter.kinds = std::move(kinds);
  return a;
}

AdversaryAction on_replica(AdversaryAction::Kind k, SimTime at, std::uint32_t r,
                           std::string label = {}) {
  AdversaryAction a;
  a.kind = k;
  a.at = at;
  a.replica = ReplicaId{r};
  a.label = std::move(label);
  return a;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{
      "honest", "responsiveness_attack", "rollback_attack", "sequential_bottleneck",
      "single_replica_failure", "primary_failure_viewchange"};
  return names;
}

AttackGroups responsiveness_groups(const SystemConfig& cfg) {
  return {range(0, cfg.f), {cfg.f}, range(cfg.f + 1, cfg.n)};
}

AttackGroups rollback_groups(const SystemConfig& cfg) {
  return {range(0, cfg.f), range(cfg.f, cfg.n - cfg.f), range(cfg.n - cfg.f, cfg.n)};
}

SimConfig build_scenario(std::string_view name, ProtocolKind kind, const ScenarioOptions& o) {
  using K = AdversaryAction::Kind;
  if (name == "honest") return base(name, kind, o, 50, millis(1000));

  if (name == "responsiveness_attack") {
    auto c = base(name, kind, o, 1, millis(500));
    c.net.gst = c.horizon;
    const auto g = responsiveness_groups(c.cfg);
    c.adversary.byzantine = g.faulty;
    auto to_dark = MessageFilter::replicas(g.dark);
    auto starved = to_dark;
    for (const auto& p : clients_of(c)) starved.insert(p);
    c.adversary.actions.push_back(filter_action(K::DropMatching, g.faulty, starved, std::nullopt));
    c.adversary.actions.push_back(filter_action(K::DelayMatching, g.responsive, to_dark,
                                                std::set<MessageKind>{MessageKind::Prepare}));
    return c;
  }

  if (name == "rollback_attack") {
    auto c = base(name, kind, o, 1, millis(500));
    c.net.gst = c.horizon;
    const auto g = rollback_groups(c.cfg);
    c.adversary.byzantine = g.faulty;
    const std::uint32_t primary = c.cfg.primary_of(0).index;
    auto to_dark = MessageFilter::replicas(g.dark);
    c.adversary.actions.push_back(on_replica(K::SnapshotTC, 0, primary, "genesis"));
    c.adversary.actions.push_back(filter_action(K::DropMatching, g.faulty, to_dark, std::nullopt));
    c.adversary.actions.push_back(filter_action(K::DelayMatching, g.responsive, to_dark,
                                                std::set<MessageKind>{MessageKind::Prepare}));
    c.adversary.actions.push_back(on_replica(K::Rollback, kAttackAt, primary, "genesis"));
    auto propose = on_replica(K::ProposeAs, kAttackAt, primary);
    propose.view = 0;
    propose.seq = 1;
    propose.batch = {Transaction{kAttackClient, 0, Put{7, 0xbad}}};
    for (auto d : g.dark) propose.targets.push_back(ReplicaId{d});
    c.adversary.actions.push_back(std::move(propose));
    return c;
  }

  if (name == "sequential_bottleneck") {
    ScenarioOptions p = o;
    if (!o.txns) p.txns = std::uint64_t{o.batch} * o.clients * 20;
    return base(name, kind, p, 0, o.horizon.value_or(millis(60000)));
  }

  if (name == "single_replica_failure") {
    auto c = base(name, kind, o, 50, millis(1000));
    c.adversary.actions.push_back(on_replica(K::Crash, 0, c.cfg.n - 1));
    return c;
  }

  if (name == "primary_failure_viewchange") {
    ScenarioOptions p = o;
    if (o.clients == 1 && !o.txns) p.clients = 4;
    auto c = base(name, kind, p, 40, millis(3000));
    const auto primary = c.cfg.primary_of(0).index;
    if (o.crash_at) {
      c.adversary.actions.push_back(on_replica(K::Crash, *o.crash_at, primary));
      return c;
    }
    // The primary crashes while broadcasting a random proposal, which reaches up to f
    // backups. Those backups stay slow until GST, so the view change may proceed without them.
    std::mt19937_64 rng(o.seed * 0x9e3779b97f4a7c15ULL + 17);
    const std::uint64_t batches = std::max<std::uint64_t>(1, (c.txns + c.cfg.batch_size - 1) /
                                                                 c.cfg.batch_size);
    AdversaryAction cut = on_replica(K::CrashOnProposal, 0, primary);
    cut.seq = std::uniform_int_distribution<std::uint64_t>(1, batches)(rng);
    std::vector<std::uint32_t> backups;
    for (std::uint32_t r = 0; r < c.cfg.n; ++r) {
      if (r != primary) backups.push_back(r);
    }
    std::shuffle(backups.begin(), backups.end(), rng);
    backups.resize(std::uniform_int_distribution<std::uint32_t>(0, c.cfg.f)(rng));
    for (auto r : backups) cut.targets.push_back(ReplicaId{r});
    c.adversary.actions.push_back(cut);
    c.net.gst = c.horizon / 6;
    c.adversary.actions.push_back(filter_action(K::DelayMatching, backups,
                                                MessageFilter::replicas(range(0, c.cfg.n)),
                                                std::nullopt));
    c.adversary.actions.back().until = c.net.gst;
    return c;
  }
  throw ConfigError("unknown scenario: " + std::string(name));
}

ScenarioResult run_named_scenario(std::string_view name, ProtocolKind kind,
                                  const ScenarioOptions& o) {
  ScenarioResult r;
  r.trace = simulate(build_scenario(name, kind, o));
  r.verdict = compute_verdict(r.trace);
  return r;
}

bool violation_expected(std::string_view name, ProtocolKind kind, Persistence p) {
  return name == "rollback_attack" && traits(kind).regime == Regime::TwoFPlusOne &&
         p == Persistence::Volatile;
}

}  // namespace trustlab
