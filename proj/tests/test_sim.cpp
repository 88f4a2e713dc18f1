#include <catch_amalgamated.hpp>

#include "trustlab/checkers.hpp"
#include "trustlab/scenarios.hpp"

using namespace trustlab;

namespace {

SimConfig honest(ProtocolKind k, std::uint64_t txns = 10) {
  SimConfig c;
  c.kind = k;
  c.cfg = config_for(k, 1);
  c.txns = txns;
  c.clients = 2;
  c.net.jitter = 300;
  return c;
}

std::size_t count(const Trace& t, TraceKind k) {
  std::size_t n = 0;
  t.each(k, [&](const TraceEvent&) { ++n; });
  return n;
}

AdversaryAction filter(AdversaryAction::Kind k, std::uint32_t from, std::uint32_t to,
                       SimTime until = kForever) {
  AdversaryAction a;
  a.kind = k;
  a.filter.from = MessageFilter::replicas({from});
  a.filter.to = MessageFilter::replicas({to});
  a.until = until;
  return a;
}

}  // namespace

TEST_CASE("same configuration gives byte-identical traces") {
  for (auto k : all_protocol_kinds()) {
    auto c = honest(k);
    c.seed = 99;
    CHECK(encode_trace(simulate(c)) == encode_trace(simulate(c)));
  }
  auto a = honest(ProtocolKind::FlexiBft);
  auto b = a;
  b.seed = 2;
  CHECK(encode_trace(simulate(a)) != encode_trace(simulate(b)));
}

TEST_CASE("one FlexiBft transaction costs one append_f") {
  SimConfig c;
  c.kind = ProtocolKind::FlexiBft;
  c.cfg = config_for(c.kind, 1);
  c.txns = 1;
  auto t = simulate(c);
  CHECK(count(t, TraceKind::ClientComplete) == 1);
  std::size_t appends = 0;
  t.each(TraceKind::TcCall, [&](const TraceEvent& e) { appends += e.text == "AppendF"; });
  CHECK(appends == 1);
}

TEST_CASE("horizon 0 records nothing but the header") {
  auto c = honest(ProtocolKind::Pbft);
  c.horizon = 0;
  c.seed = 5;
  auto t = simulate(c);
  CHECK(t.header.seed == 5);
  std::size_t beyond_submit = 0;
  for (const auto& e : t.events) {
    beyond_submit += e.kind != TraceKind::ClientSubmit && e.kind != TraceKind::Send &&
                     e.kind != TraceKind::TcCall;
  }
  CHECK(beyond_submit == 0);
  CHECK(count(t, TraceKind::ClientComplete) == 0);
}

TEST_CASE("trace files round-trip") {
  auto t = simulate(honest(ProtocolKind::FlexiZZ));
  const auto bytes = encode_trace(t);
  CHECK(encode_trace(decode_trace(bytes)) == bytes);
  CHECK_THROWS(decode_trace(std::span(bytes.data(), bytes.size() / 2)));
}

TEST_CASE("drop filters silence a link and delay filters hold messages") {
  using K = AdversaryAction::Kind;
  auto c = honest(ProtocolKind::FlexiBft);
  c.net.jitter = 0;
  c.net.gst = millis(100);
  c.adversary.byzantine = {0};
  c.adversary.actions.push_back(filter(K::DropMatching, 0, 3));
  c.adversary.actions.push_back(filter(K::DelayMatching, 1, 2, millis(40)));
  auto t = simulate(c);
  std::size_t zero_to_three = 0;
  bool early = false;
  for (const auto& e : t.events) {
    if (e.kind != TraceKind::Deliver) continue;
    zero_to_three += e.actor.id == 0 && e.peer.id == 3 && e.peer.kind == Principal::Kind::Replica;
    if (e.actor == Principal::replica(ReplicaId{1}) && e.peer == Principal::replica(ReplicaId{2})) {
      early |= e.time < millis(40);
    }
  }
  CHECK(zero_to_three == 0);
  CHECK_FALSE(early);
  CHECK(compute_verdict(t).rsm_liveness_ok);
}

TEST_CASE("adversary filters lapse at GST for honest senders") {
  using K = AdversaryAction::Kind;
  auto c = honest(ProtocolKind::FlexiBft);
  c.net.gst = millis(30);
  c.adversary.actions.push_back(filter(K::DropMatching, 1, 2));
  c.adversary.actions.push_back(filter(K::DelayMatching, 2, 3));
  auto t = simulate(c);
  bool dropped_late = false;
  bool delayed_past_gst = false;
  for (const auto& e : t.events) {
    if (e.kind == TraceKind::Drop && e.time >= millis(30)) dropped_late = true;
    if (e.kind == TraceKind::Deliver && e.actor.id == 2 && e.peer.id == 3 &&
        e.peer.kind == Principal::Kind::Replica && e.time > millis(30) + delay_bound(c.net)) {
      delayed_past_gst = true;
    }
  }
  CHECK_FALSE(dropped_late);
  CHECK_FALSE(delayed_past_gst);
  CHECK(compute_verdict(t).rsm_liveness_ok);
}

TEST_CASE("rolling back a persistent component aborts the run") {
  auto o = ScenarioOptions{};
  o.persistence = Persistence::Persistent;
  auto r = run_named_scenario("rollback_attack", ProtocolKind::MinBft, o);
  CHECK(r.verdict.aborted);
  CHECK(r.verdict.abort_reason.find("RollbackForbidden") != std::string::npos);
}

TEST_CASE("forged messages must come from byzantine signers") {
  auto c = honest(ProtocolKind::FlexiBft);
  c.adversary.byzantine = {1};
  AdversaryAction a;
  a.kind = AdversaryAction::Kind::SendForged;
  a.at = millis(1);
  Prepare p;
  p.from = ReplicaId{2};
  ProtocolMessage m{p};
  auth_of(m).signer = Principal::replica(ReplicaId{2});
  a.message = std::make_shared<const ProtocolMessage>(m);
  a.targets = {ReplicaId{3}};
  c.adversary.actions.push_back(a);
  auto t = simulate(c);
  CHECK(t.aborted());

  auto ok = honest(ProtocolKind::FlexiBft);
  ok.adversary.byzantine = {1};
  auth_of(m).signer = Principal::replica(ReplicaId{1});
  std::get<Prepare>(m).from = ReplicaId{1};
  a.message = std::make_shared<const ProtocolMessage>(m);
  ok.adversary.actions.push_back(a);
  auto t2 = simulate(ok);
  CHECK_FALSE(t2.aborted());
  CHECK(count(t2, TraceKind::ForgedSend) == 1);
  CHECK(check_authenticity(t2).empty());
}

TEST_CASE("the byzantine budget and regime are validated") {
  auto c = honest(ProtocolKind::FlexiBft);
  c.adversary.byzantine = {1, 2};
  CHECK_THROWS_AS(Simulator(c), ConfigError);
  auto d = honest(ProtocolKind::MinBft);
  d.cfg = config_for(ProtocolKind::FlexiBft, 1);
  CHECK_THROWS_AS(Simulator(d), ConfigError);
}

TEST_CASE("post-GST liveness with jitter and f silent replicas") {
  for (auto k : {ProtocolKind::Pbft, ProtocolKind::FlexiBft, ProtocolKind::FlexiZZ,
                 ProtocolKind::OFlexiBft, ProtocolKind::OFlexiZZ}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto c = honest(k, 20);
      c.seed = seed;
      c.net.jitter = 800;
      c.net.gst = millis(50);
      c.horizon = millis(3000);
      AdversaryAction crash;
      crash.kind = AdversaryAction::Kind::Crash;
      crash.replica = ReplicaId{3};
      c.adversary.actions.push_back(crash);
      auto v = compute_verdict(simulate(c));
      INFO(to_string(k) << " seed " << seed);
      CHECK(v.safety_ok);
      CHECK(v.rsm_liveness_ok);
    }
  }
}

TEST_CASE("a crash mid-proposal reaches only the chosen backups") {
  auto c = honest(ProtocolKind::FlexiZZ, 5);
  c.horizon = millis(2000);
  AdversaryAction cut;
  cut.kind = AdversaryAction::Kind::CrashOnProposal;
  cut.replica = ReplicaId{0};
  cut.seq = 3;
  cut.targets = {ReplicaId{2}};
  c.adversary.actions.push_back(cut);
  auto t = simulate(c);
  std::set<std::uint32_t> receivers;
  t.each(TraceKind::Deliver, [&](const TraceEvent& e) {
    if (static_cast<MessageKind>(e.a) == MessageKind::Preprepare && e.seq == 3 && e.view == 0) {
      receivers.insert(e.peer.id);
    }
  });
  CHECK(receivers == std::set<std::uint32_t>{2});
  CHECK(count(t, TraceKind::Crash) == 1);
  auto v = compute_verdict(t);
  CHECK(v.safety_ok);
  CHECK(v.stats.views_installed >= 1);
}

TEST_CASE("Summary traces omit per-message records") {
  auto c = honest(ProtocolKind::FlexiBft);
  c.level = TraceLevel::Summary;
  auto t = simulate(c);
  CHECK(count(t, TraceKind::Send) == 0);
  CHECK(count(t, TraceKind::Deliver) == 0);
  CHECK(count(t, TraceKind::ClientComplete) == 10);
}
