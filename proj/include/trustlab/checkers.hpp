#pragma once

#include <string>
#include <vector>

#include "trustlab/trace.hpp"

namespace trustlab {

enum class ViolationKind : std::uint8_t {
  Agreement,
  Persistence,
  Divergence,
  ConflictingReports,
  Authenticity,
  AttestationReuse,
};

std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind = ViolationKind::Agreement;
  Seq seq = 0;
  View view = 0;
  std::vector<std::uint32_t> replicas;
  std::vector<Digest> digests;
  std::string detail;
};

struct RequestLiveness {
  ClientId client;
  std::uint64_t request_id = 0;
  bool completed = false;
  bool committed_somewhere = false;
  SimTime latency = 0;
  std::string blocking_reason;
};

struct Stats {
  double tps = 0;
  double mean_latency_us = 0;
  std::uint64_t completed_txns = 0;
  std::uint64_t submitted_requests = 0;
  std::uint64_t completed_requests = 0;
  SimTime makespan = 0;
  std::vector<std::uint64_t> trusted_calls;   // per replica
  std::vector<std::uint64_t> proposed;        // batches proposed per replica, re-proposals included
  std::uint64_t max_in_flight = 0;
  std::uint64_t undo_count = 0;
  std::uint64_t views_installed = 0;
};

struct Verdict {
  bool safety_ok = true;
  bool persistence_ok = true;
  bool rsm_liveness_ok = true;
  bool consensus_liveness_ok = true;
  bool aborted = false;
  std::string abort_reason;
  std::vector<Violation> violations;
  std::vector<RequestLiveness> requests;
  Stats stats;
};

/// Honest replicas executing different batches at one sequence number. Speculative kinds
/// are judged on executions a client quorum could have observed.
std::vector<Violation> check_agreement(const Trace& t);

/// Client-completed batches must reappear at their sequence number in every later NewView.
std::vector<Violation> check_persistence(const Trace& t);

/// Every delivered message claiming an honest signer was sent by that signer. Needs a Full trace.
std::vector<Violation> check_authenticity(const Trace& t);

/// Duplicate (component, kind, q, k) attestations are allowed only after a rollback.
std::vector<Violation> check_attestation_registry(const Trace& t);

/// Per submitted request: completed by `horizon`, and if not, why.
std::vector<RequestLiveness> check_rsm_liveness(const Trace& t, SimTime horizon);

Stats measure(const Trace& t);

Verdict compute_verdict(const Trace& t);

}  // namespace trustlab
