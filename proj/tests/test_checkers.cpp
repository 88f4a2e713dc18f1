#include <catch_amalgamated.hpp>

#include "trustlab/checkers.hpp"

using namespace trustlab;

namespace {

Trace blank(ProtocolKind k = ProtocolKind::FlexiBft) {
  Trace t;
  t.header.kind = k;
  t.header.f = 1;
  t.header.n = traits(k).regime == Regime::TwoFPlusOne ? 3 : 4;
  t.header.horizon = millis(1000);
  return t;
}

TraceEvent ev(SimTime at, TraceKind k, Principal actor, View v = 0, Seq s = 0, Digest d = {},
              std::uint64_t a = 0, std::uint64_t b = 0, std::string text = {}) {
  TraceEvent e;
  e.time = at;
  e.kind = k;
  e.actor = actor;
  e.view = v;
  e.seq = s;
  e.digest = d;
  e.a = a;
  e.b = b;
  e.text = std::move(text);
  return e;
}

Principal rep(std::uint32_t i) { return Principal::replica(ReplicaId{i}); }
Principal cli(std::uint32_t i) { return Principal::client(ClientId{i}); }
const Digest A = digest_of("A");
const Digest B = digest_of("B");

}  // namespace

TEST_CASE("measure: 1000 txns over two virtual seconds is 500 tps") {
  auto t = blank();
  t.events.push_back(ev(0, TraceKind::ClientSubmit, cli(0), 0, 0, A, 0, 1000));
  t.events.push_back(ev(millis(2000), TraceKind::ClientComplete, cli(0), 0, 1, A, 0, millis(2000)));
  auto s = measure(t);
  CHECK(s.completed_txns == 1000);
  CHECK(s.tps == Catch::Approx(500));
  CHECK(s.mean_latency_us == Catch::Approx(2e6));
}

TEST_CASE("measure tracks in-flight proposals per primary") {
  auto t = blank();
  t.events.push_back(ev(0, TraceKind::Proposed, rep(0), 0, 1));
  t.events.push_back(ev(1, TraceKind::Proposed, rep(0), 0, 2));
  t.events.push_back(ev(2, TraceKind::PrimaryCommitted, rep(0), 0, 1));
  t.events.push_back(ev(3, TraceKind::Proposed, rep(0), 0, 3));
  CHECK(measure(t).max_in_flight == 2);
}

TEST_CASE("an empty workload is vacuously live") {
  auto v = compute_verdict(blank());
  CHECK(v.rsm_liveness_ok);
  CHECK(v.consensus_liveness_ok);
  CHECK(v.safety_ok);
  CHECK(v.requests.empty());
}

TEST_CASE("agreement compares honest executions only") {
  auto t = blank(ProtocolKind::MinBft);
  t.header.byzantine = {0};
  t.events.push_back(ev(1, TraceKind::Executed, rep(0), 0, 1, B));
  t.events.push_back(ev(1, TraceKind::Executed, rep(1), 0, 1, A));
  t.events.push_back(ev(1, TraceKind::Executed, rep(2), 0, 1, A));
  CHECK(check_agreement(t).empty());
  t.events.push_back(ev(2, TraceKind::Executed, rep(2), 0, 2, B));
  t.events.push_back(ev(2, TraceKind::Executed, rep(1), 0, 2, A));
  auto v = check_agreement(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].seq == 2);
  CHECK(v[0].digests.size() == 2);
  CHECK_FALSE(compute_verdict(t).safety_ok);
}

TEST_CASE("speculative agreement ignores executions no client could observe") {
  auto t = blank(ProtocolKind::FlexiZZ);
  for (std::uint32_t r : {0u, 1u, 2u}) t.events.push_back(ev(1, TraceKind::Executed, rep(r), 0, 1, A));
  t.events.push_back(ev(1, TraceKind::Executed, rep(3), 0, 1, B));
  CHECK(check_agreement(t).empty());
  for (std::uint32_t r : {1u, 2u, 3u}) t.events.push_back(ev(5, TraceKind::Executed, rep(r), 1, 1, B));
  CHECK(check_agreement(t).size() == 1);
}

TEST_CASE("completed batches must be re-proposed at their sequence number") {
  auto t = blank();
  t.events.push_back(ev(1, TraceKind::ClientComplete, cli(0), 0, 1, A));
  t.events.push_back(ev(2, TraceKind::Reproposed, rep(1), 1, 1, A));
  t.events.push_back(ev(3, TraceKind::NewViewInstalled, rep(1), 1, 0, {}, 0, 1));
  CHECK(check_persistence(t).empty());

  auto bad = blank();
  bad.events.push_back(ev(1, TraceKind::ClientComplete, cli(0), 0, 1, A));
  bad.events.push_back(ev(2, TraceKind::Reproposed, rep(1), 1, 1, B));
  bad.events.push_back(ev(3, TraceKind::NewViewInstalled, rep(1), 1, 0, {}, 0, 1));
  CHECK(check_persistence(bad).size() == 1);

  auto covered = blank();
  covered.events.push_back(ev(1, TraceKind::ClientComplete, cli(0), 0, 1, A));
  covered.events.push_back(ev(3, TraceKind::NewViewInstalled, rep(1), 1, 0, {}, 1, 0));
  CHECK(check_persistence(covered).empty());
}

TEST_CASE("re-issued attestations are legal only after a volatile rollback") {
  auto t = blank();
  t.header.persistence = Persistence::Volatile;
  t.events.push_back(ev(1, TraceKind::TcCall, rep(0), 0, 1, A, 0, 0, "AppendF"));
  t.events.push_back(ev(2, TraceKind::TcCall, rep(0), 0, 1, B, 0, 0, "AppendF"));
  CHECK(check_attestation_registry(t).size() == 1);

  auto rolled = blank();
  rolled.header.persistence = Persistence::Volatile;
  rolled.events.push_back(ev(1, TraceKind::TcCall, rep(0), 0, 1, A, 0, 0, "AppendF"));
  rolled.events.push_back(ev(2, TraceKind::Rollback, rep(0)));
  rolled.events.push_back(ev(3, TraceKind::TcCall, rep(0), 0, 1, B, 0, 0, "AppendF"));
  CHECK(check_attestation_registry(rolled).empty());
}

TEST_CASE("liveness reports why a request is stuck") {
  auto t = blank(ProtocolKind::MinBft);
  t.events.push_back(ev(0, TraceKind::ClientSubmit, cli(0), 0, 0, A, 0, 1));
  t.events.push_back(ev(1, TraceKind::Executed, rep(1), 0, 1, A, 0, 0));
  t.events.push_back(ev(9, TraceKind::ViewChangeStarted, rep(2), 1));
  auto r = check_rsm_liveness(t, t.header.horizon);
  REQUIRE(r.size() == 1);
  CHECK_FALSE(r[0].completed);
  CHECK(r[0].committed_somewhere);
  CHECK(r[0].blocking_reason.find("insufficient matching responses") == 0);
}
