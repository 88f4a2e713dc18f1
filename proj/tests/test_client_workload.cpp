#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "trustlab/client.hpp"
#include "trustlab/throughput_model.hpp"
#include "trustlab/workload.hpp"

using namespace trustlab;

namespace {

struct Harness {
  KeyRing keys{3};
  ClientSession session;
  explicit Harness(ProtocolKind k, bool all_n = false)
      : session(ClientId{7}, {k, config_for(k, 1), all_n, millis(8), millis(64)}, keys) {}

  Response reply(std::uint32_t replica, View v = 0, Seq s = 1, std::uint64_t result = 0) const {
    Response r;
    r.view = v;
    r.seq = s;
    r.txn = {ClientId{7}, 0};
    r.request_id = 0;
    r.result = result;
    r.replica = ReplicaId{replica};
    return r;
  }
};

std::uint32_t addressed_to(const Effects& fx) {
  REQUIRE(fx.out.size() == 1);
  CHECK(fx.out[0].to == Outgoing::To::Replica);
  return fx.out[0].id;
}

}  // namespace

TEST_CASE("completion quorums follow the protocol") {
  CHECK(Harness(ProtocolKind::FlexiBft).session.completion_quorum() == 2);
  CHECK(Harness(ProtocolKind::Pbft).session.completion_quorum() == 2);
  CHECK(Harness(ProtocolKind::MinBft).session.completion_quorum() == 2);
  CHECK(Harness(ProtocolKind::PbftEA).session.completion_quorum() == 2);
  CHECK(Harness(ProtocolKind::FlexiZZ).session.completion_quorum() == 3);
  CHECK(Harness(ProtocolKind::MinZZ).session.completion_quorum() == 3);
  CHECK(Harness(ProtocolKind::Pbft, true).session.completion_quorum() == 4);
}

TEST_CASE("submit addresses the believed primary with fresh nonces") {
  Harness h(ProtocolKind::FlexiBft);
  auto fx = h.session.submit({Put{1, 1}}, 0);
  CHECK(addressed_to(fx) == 0);
  const auto& req = std::get<Request>(*fx.out[0].msg);
  CHECK(req.batch.at(0).nonce == 0);
  CHECK(verify_message(*fx.out[0].msg, h.keys));

  h.session.on_response(h.reply(1, 1), 1);
  h.session.on_response(h.reply(2, 1), 1);
  REQUIRE(h.session.idle());
  auto next = h.session.submit({Put{1, 2}}, 2);
  CHECK(addressed_to(next) == 1);
  CHECK(std::get<Request>(*next.out[0].msg).batch.at(0).nonce == 1);
}

TEST_CASE("FlexiBft completes on f+1 identical responses") {
  Harness h(ProtocolKind::FlexiBft);
  h.session.submit({Put{1, 1}}, 0);
  h.session.on_response(h.reply(1), 10);
  CHECK_FALSE(h.session.idle());
  h.session.on_response(h.reply(1), 11);  // duplicates from one replica do not count twice
  CHECK_FALSE(h.session.idle());
  h.session.on_response(h.reply(2), 12);
  REQUIRE(h.session.idle());
  CHECK(h.session.completions().at(0).latency == 12);
}

TEST_CASE("mismatched results do not combine") {
  Harness h(ProtocolKind::FlexiBft);
  h.session.submit({Get{1}}, 0);
  h.session.on_response(h.reply(1, 0, 1, 5), 1);
  h.session.on_response(h.reply(2, 0, 1, 6), 1);
  CHECK_FALSE(h.session.idle());
  h.session.on_response(h.reply(3, 0, 1, 5), 1);
  CHECK(h.session.idle());
}

TEST_CASE("FlexiZZ needs 2f+1 and MinZZ needs every replica") {
  Harness zz(ProtocolKind::FlexiZZ);
  zz.session.submit({Put{1, 1}}, 0);
  zz.session.on_response(zz.reply(0), 1);
  zz.session.on_response(zz.reply(1), 1);
  CHECK_FALSE(zz.session.idle());
  zz.session.on_response(zz.reply(2), 1);
  CHECK(zz.session.idle());

  Harness min(ProtocolKind::MinZZ);
  min.session.submit({Put{1, 1}}, 0);
  min.session.on_response(min.reply(0), 1);
  min.session.on_response(min.reply(1), 1);
  CHECK_FALSE(min.session.idle());
}

TEST_CASE("speculative responses must agree on the view") {
  Harness zz(ProtocolKind::FlexiZZ);
  zz.session.submit({Put{1, 1}}, 0);
  zz.session.on_response(zz.reply(0, 0), 1);
  zz.session.on_response(zz.reply(1, 1), 1);
  zz.session.on_response(zz.reply(2, 1), 1);
  CHECK_FALSE(zz.session.idle());

  Harness bft(ProtocolKind::FlexiBft);
  bft.session.submit({Put{1, 1}}, 0);
  bft.session.on_response(bft.reply(0, 0), 1);
  bft.session.on_response(bft.reply(1, 1), 1);
  CHECK(bft.session.idle());
}

TEST_CASE("a timeout broadcasts the request and backs off") {
  Harness h(ProtocolKind::FlexiBft);
  auto fx = h.session.submit({Put{1, 1}}, 0);
  REQUIRE(fx.timers.size() == 1);
  CHECK(fx.timers[0].at == millis(8));
  auto t1 = h.session.on_timer(fx.timers[0].ev, millis(8));
  REQUIRE(t1.out.size() == 1);
  CHECK(t1.out[0].to == Outgoing::To::AllReplicas);
  REQUIRE(t1.timers.size() == 1);
  CHECK(t1.timers[0].at == millis(24));

  h.session.on_response(h.reply(1), millis(9));
  h.session.on_response(h.reply(2), millis(9));
  CHECK(h.session.completions().size() == 1);
  auto stale = h.session.on_timer(t1.timers[0].ev, millis(24));
  CHECK(stale.out.empty());
  h.session.on_response(h.reply(3), millis(25));
  CHECK(h.session.completions().size() == 1);
}

TEST_CASE("workload generation is deterministic and honours read_fraction") {
  Workload w;
  w.n_txns = 1000;
  w.seed = 4;
  CHECK(generate_workload(w) == generate_workload(w));
  w.read_fraction = 0;
  for (const auto& op : generate_workload(w)) {
    REQUIRE(std::holds_alternative<Put>(op));
    CHECK(std::get<Put>(op).key < w.n_records);
  }
  w.read_fraction = 1;
  for (const auto& op : generate_workload(w)) CHECK(std::holds_alternative<Get>(op));
  w.n_records = 0;
  CHECK_THROWS_AS(generate_workload(w), ConfigError);
}

TEST_CASE("Zipf(0.99) head frequencies match the analytic pmf") {
  Workload w;
  w.distribution = KeyDistribution::Zipf;
  w.zipf_theta = 0.99;
  w.n_txns = 100000;
  w.read_fraction = 1;
  w.seed = 12;
  std::map<std::uint64_t, std::uint64_t> hits;
  for (const auto& op : generate_workload(w)) ++hits[std::get<Get>(op).key];

  // Normalizer summed smallest terms first.
  long double norm = 0;
  for (std::uint64_t r = w.n_records; r >= 1; --r) norm += 1.0L / std::pow((long double)r, 0.99L);
  for (std::uint64_t rank = 1; rank <= 3; ++rank) {
    const double expected = static_cast<double>(1.0L / std::pow((long double)rank, 0.99L) / norm);
    const double observed = static_cast<double>(hits[rank - 1]) / w.n_txns;
    INFO("rank " << rank << " expected " << expected << " observed " << observed);
    CHECK(std::abs(observed - expected) <= 0.1 * expected);
  }
}

TEST_CASE("throughput model arithmetic") {
  ThroughputParams p;
  p.batch = 100;
  p.rtt = millis(0.2);
  for (auto k : {ProtocolKind::MinBft, ProtocolKind::MinZZ, ProtocolKind::OFlexiZZ}) {
    p.kind = k;
    p.access_latency = millis(10);
    CHECK(throughput_model(p) == Catch::Approx(10000));
    p.access_latency = millis(100);
    CHECK(throughput_model(p) == Catch::Approx(1000));
    p.access_latency = millis(200);
    CHECK(throughput_model(p) == Catch::Approx(500));
  }
  p.kind = ProtocolKind::PbftEA;
  p.access_latency = millis(10);
  CHECK(throughput_model(p) == Catch::Approx(5000));

  p.kind = ProtocolKind::MinBft;
  p.access_latency = 0;
  p.rtt = millis(1);
  CHECK(throughput_model(p) == Catch::Approx(100.0 / (2 * 0.001)));

  p.kind = ProtocolKind::FlexiZZ;
  p.rtt = millis(2);
  p.access_latency = millis(10);
  p.pipeline_width = 16;
  p.counter_lanes = 16;
  CHECK(throughput_model(p) == Catch::Approx(100 * 16 / 0.012));
  p.counter_lanes = 1;
  CHECK(throughput_model(p) == Catch::Approx(10000));
}
