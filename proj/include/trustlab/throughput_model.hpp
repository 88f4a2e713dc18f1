#pragma once

#include "trustlab/protocol_kind.hpp"

namespace trustlab {

struct ThroughputParams {
  ProtocolKind kind = ProtocolKind::FlexiBft;
  std::uint32_t batch = 100;
  SimTime rtt = millis(1);
  SimTime access_latency = millis(10);
  /// Consensus phases; taken from the protocol when zero.
  std::uint32_t phases = 0;
  std::uint32_t pipeline_width = 64;
  std::uint32_t counter_lanes = 1;
};

/// Predicted transactions per second.
///
/// Sequential kinds: min(batch / (phases * rtt), batch / access_latency).
/// Parallel kinds: batch * min(width / (access_latency + phases * rtt), lanes / access_latency),
/// i.e. one component access per batch at the primary, `width` batches in flight.
/// access_latency is multiplied by the accesses per batch at the busiest replica: two for
/// trusted-log kinds, one otherwise.
double throughput_model(const ThroughputParams& p);

}  // namespace trustlab
