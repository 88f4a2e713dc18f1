#include <catch_amalgamated.hpp>

#include "cluster.hpp"
#include "trustlab/codec.hpp"

using namespace trustlab;
using testnet::Cluster;
using testnet::sent;

namespace {

Preprepare entry(View v, Seq s, std::uint64_t tag) {
  Preprepare pp;
  pp.view = v;
  pp.seq = s;
  pp.batch = {Transaction{ClientId{1}, tag, Put{tag, tag}}};
  pp.digest = batch_digest(pp.batch);
  return pp;
}

ViewChange report(std::uint32_t from, std::vector<Preprepare> pps, Seq stable = 0) {
  ViewChange vc;
  vc.new_view = 1;
  vc.from = ReplicaId{from};
  vc.stable_seq = stable;
  vc.prepared_set = std::move(pps);
  return vc;
}

/// Replica `r` receives a request the primary never proposes and times out on it.
Effects complain(Cluster& c, std::uint32_t r, std::uint32_t client) {
  auto fx = c.deliver(r, c.request(client, 0, Put{client, 1}));
  std::erase_if(c.wire, [&](const auto& e) { return std::holds_alternative<Request>(*e.msg); });
  for (const auto& t : fx.timers) {
    if (t.ev.kind == TimerKind::RequestForwarded) return c.fire(r, t.ev);
  }
  FAIL("no forwarding timer armed");
  return {};
}

}  // namespace

TEST_CASE("plan_new_view fills gaps with no-ops") {
  auto plan = plan_new_view({report(1, {entry(0, 1, 1), entry(0, 2, 2)}),
                             report(2, {entry(0, 5, 5)}), report(3, {})});
  REQUIRE(plan.entries.size() == 5);
  std::vector<bool> noop;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(plan.entries[i].seq == i + 1);
    noop.push_back(plan.entries[i].noop);
  }
  CHECK(noop == std::vector<bool>{false, false, true, true, false});
  CHECK(plan.entries[4].digest == entry(0, 5, 5).digest);
  CHECK(plan.conflicts.empty());
}

TEST_CASE("plan_new_view prefers the highest view and flags same-view conflicts") {
  auto plan = plan_new_view({report(1, {entry(0, 1, 1)}), report(2, {entry(2, 1, 7)})});
  REQUIRE(plan.entries.size() == 1);
  CHECK(plan.entries[0].digest == entry(2, 1, 7).digest);
  CHECK(plan.conflicts.empty());

  auto clash = plan_new_view({report(1, {entry(0, 1, 1)}), report(2, {entry(0, 1, 2)})});
  CHECK(clash.conflicts == std::vector<Seq>{1});
  const auto smaller = std::min(entry(0, 1, 1).digest, entry(0, 1, 2).digest);
  CHECK(clash.entries.at(0).digest == smaller);
}

TEST_CASE("plan_new_view starts after the highest stable checkpoint") {
  auto plan = plan_new_view({report(1, {entry(0, 3, 3), entry(0, 4, 4)}, 2), report(2, {}, 3)});
  CHECK(plan.h == 3);
  REQUIRE(plan.entries.size() == 1);
  CHECK(plan.entries[0].seq == 4);
}

TEST_CASE("a lone complainant cannot move the others") {
  Cluster c(ProtocolKind::FlexiBft, 1);
  auto fx = complain(c, 1, 500);
  CHECK(sent<ViewChange>(fx).size() == 1);
  c.pump();
  CHECK(c[1].in_view_change());
  for (std::uint32_t r : {0u, 2u, 3u}) {
    CHECK_FALSE(c[r].in_view_change());
    CHECK(c[r].view() == 0);
  }
}

TEST_CASE("f+1 complainants recruit the rest and the next primary installs the view") {
  Cluster c(ProtocolKind::FlexiBft, 1);
  c.deliver(0, c.request(100, 0, Put{1, 1}));
  c.pump();
  complain(c, 1, 500);
  complain(c, 2, 501);
  c.pump();
  for (std::uint32_t r = 0; r < 4; ++r) {
    CHECK(c[r].view() == 1);
    CHECK_FALSE(c[r].in_view_change());
  }
  CHECK(c[1].is_primary());
  CHECK(c[3].executed_digest(1) == c[1].executed_digest(1));
  CHECK(c.count_notes(TraceKind::NewViewInstalled) == 4);
}

TEST_CASE("a NewView short of its ViewChange quorum is refused") {
  Cluster c(ProtocolKind::FlexiBft, 1);
  std::optional<NewView> nv;
  c.drop = [&](const Cluster::Envelope& e) {
    if (auto* m = std::get_if<NewView>(e.msg.get())) {
      nv = *m;
      return true;
    }
    return false;
  };
  complain(c, 1, 500);
  complain(c, 2, 501);
  c.pump();
  REQUIRE(nv);
  CHECK(nv->viewchange_set.size() == 3);
  nv->viewchange_set.pop_back();
  ProtocolMessage m{*nv};
  sign_message(m, Principal::replica(ReplicaId{1}), c.keys);
  c.drop = nullptr;
  c.deliver(2, m);
  CHECK(c.count_notes(TraceKind::InvalidNewView, 2) == 1);
  CHECK(c[2].in_view_change());
}

TEST_CASE("speculative executions left out of the NewView are undone") {
  Cluster c(ProtocolKind::FlexiZZ, 2);  // n = 7
  c.deliver(0, c.request(100, 0, Put{1, 10}));
  c.pump();
  const auto settled = c[6].kv();
  c.drop = [](const Cluster::Envelope& e) {
    return std::holds_alternative<Preprepare>(*e.msg) &&
           e.to != Principal::replica(ReplicaId{6}) && e.to != e.from;
  };
  c.deliver(0, c.request(101, 0, Put{1, 20}));
  c.pump();
  REQUIRE(c[6].watermark() == 2);
  CHECK(c[6].kv().at(1) == 20);

  // Only replicas 1..5 report; the old primary and replica 6 stay out of the new view.
  c.drop = [](const Cluster::Envelope& e) {
    if (!std::holds_alternative<ViewChange>(*e.msg)) return false;
    return e.from == Principal::replica(ReplicaId{0}) || e.from == Principal::replica(ReplicaId{6});
  };
  for (std::uint32_t r = 1; r <= 3; ++r) complain(c, r, 500 + r);
  c.pump();
  CHECK(c[6].view() == 1);
  CHECK(c.count_notes(TraceKind::UndoApplied, 6) == 1);
  CHECK(c[6].watermark() == 1);
  CHECK(c[6].kv() == settled);
  CHECK(c[6].kv() == c[1].kv());
}
