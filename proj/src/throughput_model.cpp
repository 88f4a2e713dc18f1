#include "trustlab/throughput_model.hpp"

#include <algorithm>
#include <limits>

namespace trustlab {

double throughput_model(const ThroughputParams& p) {
  const auto& t = traits(p.kind);
  const double phases = p.phases > 0 ? p.phases : t.phases;
  const double rtt = static_cast<double>(p.rtt) / 1e6;
  // Trusted-log kinds append in two phases per batch at every replica.
  const double accesses = t.attest == AttestStyle::Log ? 2 : 1;
  const double access = accesses * static_cast<double>(p.access_latency) / 1e6;
  const double batch = p.batch;
  const double inf = std::numeric_limits<double>::infinity();

  const double round = phases * rtt;
  if (t.sequential) {
    const double by_rounds = round > 0 ? batch / round : inf;
    const double by_access = access > 0 ? batch / access : inf;
    return std::min(by_rounds, by_access);
  }
  const double cost = access + round;
  const double by_window = cost > 0 ? p.pipeline_width / cost : inf;
  const double by_lanes = access > 0 ? p.counter_lanes / access : inf;
  return batch * std::min(by_window, by_lanes);
}

}  // namespace trustlab
