#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "trustlab/types.hpp"

namespace trustlab {

enum class ProtocolKind : std::uint8_t {
  Pbft,
  PbftEA,
  OPbftEA,
  MinBft,
  MinZZ,
  FlexiBft,
  FlexiZZ,
  OFlexiBft,
  OFlexiZZ,
};

std::string_view to_string(ProtocolKind k);
std::optional<ProtocolKind> parse_protocol_kind(std::string_view s);
const std::vector<ProtocolKind>& all_protocol_kinds();

/// Which trusted-component evidence accompanies proposals and votes.
enum class AttestStyle : std::uint8_t {
  None,         // plain signatures only
  Log,          // every phase message carries a trusted-log attestation from its sender
  Counter,      // Preprepare and Prepare carry counter bindings from their senders
  PrimaryOnly,  // only the primary's Preprepare carries a counter binding
};

struct ProtocolTraits {
  ProtocolKind kind;
  Regime regime;
  std::uint32_t phases;
  bool sequential;
  bool speculative;   // executes on Preprepare and may undo during a view change
  bool commit_phase;  // has a separate Commit vote after Prepare
  bool flexi;
  AttestStyle attest;
};

const ProtocolTraits& traits(ProtocolKind k);

/// Log ids used by the PBFT-EA family, one log per (view, phase).
enum class LogPhase : std::uint8_t { Preprepare, Prepare, Commit, Checkpoint, ViewChange };
std::uint64_t log_id(View v, LogPhase p);

/// Quorum sizes for a protocol at a given configuration.
struct Quorums {
  std::uint32_t prepare;
  std::uint32_t commit;
  std::uint32_t client;
  std::uint32_t checkpoint;
  std::uint32_t new_view;
  std::uint32_t join_view_change;
};

/// `all_n_client` switches the client rule to the Zyzzyva fast path (all n replicas).
Quorums quorums(ProtocolKind k, const SystemConfig& cfg, bool all_n_client = false);

/// Configuration with the replica count implied by the protocol's regime.
SystemConfig config_for(ProtocolKind k, std::uint32_t f, std::uint32_t batch_size = 1,
                        Seq checkpoint_period = 64);

}  // namespace trustlab
