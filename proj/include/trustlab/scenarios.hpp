#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustlab/checkers.hpp"
#include "trustlab/simulator.hpp"

namespace trustlab {

struct ScenarioOptions {
  std::uint32_t f = 1;
  Persistence persistence = Persistence::Persistent;
  SimTime rtt = millis(2);
  SimTime jitter = 0;
  std::uint32_t batch = 1;
  SimTime access_latency = 0;
  std::uint32_t pipeline_width = 64;
  std::uint32_t counter_lanes = 1;
  std::uint32_t clients = 1;
  std::optional<std::uint64_t> txns;
  std::optional<SimTime> horizon;
  /// primary_failure_viewchange: crash time; drawn from the seed when unset.
  std::optional<SimTime> crash_at;
  std::uint64_t seed = 1;
  TraceLevel level = TraceLevel::Full;
  AuthMode auth = AuthMode::Simulated;
};

struct ScenarioResult {
  Trace trace;
  Verdict verdict;
};

/// honest, responsiveness_attack, rollback_attack, sequential_bottleneck,
/// single_replica_failure, primary_failure_viewchange.
const std::vector<std::string>& scenario_names();

/// Throws ConfigError for an unknown name.
SimConfig build_scenario(std::string_view name, ProtocolKind kind, const ScenarioOptions& o);

ScenarioResult run_named_scenario(std::string_view name, ProtocolKind kind,
                                  const ScenarioOptions& o);

/// Safety violations are expected only from the rollback attack on a 2f+1 deployment with
/// volatile components.
bool violation_expected(std::string_view name, ProtocolKind kind, Persistence p);

/// Replica partitions used by the attack scripts: byzantine F (holding the primary), the
/// single responsive honest replica R (or G), and the starved set D.
struct AttackGroups {
  std::vector<std::uint32_t> faulty;
  std::vector<std::uint32_t> responsive;
  std::vector<std::uint32_t> dark;
};
AttackGroups responsiveness_groups(const SystemConfig& cfg);
AttackGroups rollback_groups(const SystemConfig& cfg);

}  // namespace trustlab
