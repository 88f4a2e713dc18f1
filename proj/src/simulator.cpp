#include "trustlab/simulator.hpp"

#include <algorithm>

#include "trustlab/codec.hpp"
#include "trustlab/well_formed.hpp"

namespace trustlab {

bool MessageFilter::matches(Principal f, Principal t, MessageKind k) const {
  if (from && !from->count(f)) return false;
  if (to && !to->count(t)) return false;
  if (kinds && !kinds->count(k)) return false;
  return true;
}

std::set<Principal> MessageFilter::replicas(const std::vector<std::uint32_t>& ids) {
  std::set<Principal> out;
  for (auto i : ids) out.insert(Principal::replica(ReplicaId{i}));
  return out;
}

SimTime delay_bound(const NetworkModel& net) {
  SimTime base = net.base_delay;
  for (const auto& row : net.matrix) {
    for (auto d : row) base = std::max(base, d);
  }
  if (net.client_delay) base = std::max(base, *net.client_delay);
  return base + net.jitter;
}

namespace {

View view_of(const ProtocolMessage& m) {
  return std::visit(
      [](const auto& x) -> View {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ViewChange> || std::is_same_v<T, NewView>) {
          return x.new_view;
        } else if constexpr (std::is_same_v<T, Request> || std::is_same_v<T, Checkpoint>) {
          return 0;
        } else {
          return x.view;
        }
      },
      m);
}

Seq seq_of(const ProtocolMessage& m) {
  return std::visit(
      [](const auto& x) -> Seq {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Request>) {
          return x.request_id;
        } else if constexpr (std::is_same_v<T, ViewChange> || std::is_same_v<T, NewView>) {
          return 0;
        } else {
          return x.seq;
        }
      },
      m);
}

}  // namespace

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.cfg.validate();
  if (cfg_.cfg.regime != traits(cfg_.kind).regime) {
    throw ConfigError(std::string(to_string(cfg_.kind)) + " requires n = " +
                      (traits(cfg_.kind).regime == Regime::TwoFPlusOne ? "2f+1" : "3f+1"));
  }
  if (cfg_.adversary.byzantine.size() > cfg_.cfg.f) {
    throw ConfigError("byzantine set larger than f");
  }
  keys_ = std::make_unique<KeyRing>(cfg_.seed, cfg_.auth);
  byzantine_.insert(cfg_.adversary.byzantine.begin(), cfg_.adversary.byzantine.end());

  const SimTime bound = delay_bound(cfg_.net);
  ReplicaOptions ro;
  ro.kind = cfg_.kind;
  ro.cfg = cfg_.cfg;
  ro.persistence = cfg_.persistence;
  ro.access_latency = cfg_.access_latency;
  ro.counter_lanes = cfg_.counter_lanes;
  ro.pipeline_width = cfg_.pipeline_width;
  // Honest queueing can delay a request by one trusted access per outstanding request.
  const SimTime queueing = cfg_.access_latency *
                           (1 + (cfg_.clients + cfg_.counter_lanes - 1) / cfg_.counter_lanes);
  ro.view_change_timeout = cfg_.view_change_timeout.value_or(10 * bound + 2 * queueing);
  ro.all_n_client = cfg_.all_n_client;
  for (std::uint32_t i = 0; i < cfg_.cfg.n; ++i) {
    keys_->register_component(i, ReplicaId{i});
    replicas_.push_back(std::make_unique<Replica>(ReplicaId{i}, ro, *keys_));
    auto& tc = replicas_.back()->tc();
    tc.set_observer([this, i](TcOp op, const Attestation& a, SimTime at) {
      TraceEvent e;
      e.time = at;
      e.kind = TraceKind::TcCall;
      e.actor = Principal::replica(ReplicaId{i});
      e.view = static_cast<View>(a.kind);
      e.seq = a.k;
      e.digest = a.x.value_or(Digest{});
      e.a = a.q;
      e.b = a.component;
      e.text = std::string(to_string(op));
      record(std::move(e));
    });
  }
  crashed_.assign(cfg_.cfg.n, false);
  cpu_free_.assign(cfg_.cfg.n, 0);

  ClientOptions co;
  co.kind = cfg_.kind;
  co.cfg = cfg_.cfg;
  co.all_n_client = cfg_.all_n_client;
  co.retry_timeout = cfg_.client_retry.value_or(8 * bound);
  co.max_retry_timeout = std::max(co.retry_timeout, 64 * bound);
  const std::uint64_t batch = cfg_.cfg.batch_size;
  const std::uint64_t per_client =
      cfg_.clients == 0 ? 0 : (cfg_.txns + cfg_.clients - 1) / cfg_.clients;
  for (std::uint32_t c = 0; c < cfg_.clients; ++c) {
    ClientId id{cfg_.first_client + c};
    clients_.push_back(std::make_unique<ClientSession>(id, co, *keys_));
    Workload w = cfg_.workload;
    w.seed = cfg_.workload.seed * 1000003ULL + cfg_.seed * 7919ULL + c;
    streams_.emplace_back(w);
    batches_left_.push_back((per_client + batch - 1) / batch);
  }

  auto& h = trace_.header;
  h.scenario = cfg_.scenario;
  h.kind = cfg_.kind;
  h.f = cfg_.cfg.f;
  h.n = cfg_.cfg.n;
  h.seed = cfg_.seed;
  h.horizon = cfg_.horizon;
  h.gst = cfg_.net.gst;
  h.byzantine.assign(byzantine_.begin(), byzantine_.end());
  h.persistence = cfg_.persistence;
  h.clients = cfg_.clients;
  h.batch_size = cfg_.cfg.batch_size;
  h.access_latency = cfg_.access_latency;
  h.level = cfg_.level;
}

Simulator::~Simulator() = default;

bool Simulator::byzantine(Principal p) const {
  return p.kind == Principal::Kind::Replica && byzantine_.count(p.id);
}

void Simulator::push(Event e) {
  e.tie = tie_++;
  queue_.push(std::move(e));
}

void Simulator::record(TraceEvent e) { trace_.events.push_back(std::move(e)); }

void Simulator::record_msg(TraceKind k, SimTime t, Principal from, Principal to,
                           const ProtocolMessage& m) {
  if (cfg_.level != TraceLevel::Full && k != TraceKind::ForgedSend) return;
  TraceEvent e;
  e.time = t;
  e.kind = k;
  e.actor = from;
  e.peer = to;
  e.view = view_of(m);
  e.seq = seq_of(m);
  const auto& auth = auth_of(m);
  e.digest = auth.payload_digest;
  e.a = static_cast<std::uint64_t>(kind_of(m));
  e.b = (static_cast<std::uint64_t>(auth.signer.kind) << 32) | auth.signer.id;
  record(std::move(e));
}

void Simulator::abort(SimTime now, std::string why) {
  TraceEvent e;
  e.time = now;
  e.kind = TraceKind::Abort;
  e.text = std::move(why);
  record(std::move(e));
  stopped_ = true;
}

SimTime Simulator::link_delay(Principal from, Principal to) {
  SimTime base = cfg_.net.base_delay;
  const bool replicas = from.kind == Principal::Kind::Replica && to.kind == Principal::Kind::Replica;
  if (replicas && !cfg_.net.matrix.empty()) {
    base = cfg_.net.matrix.at(from.id).at(to.id);
  } else if (!replicas && cfg_.net.client_delay) {
    base = *cfg_.net.client_delay;
  }
  SimTime j = cfg_.net.jitter > 0 ? std::uniform_int_distribution<SimTime>(0, cfg_.net.jitter)(rng_) : 0;
  return base + j;
}

bool Simulator::cut_proposal(Principal actor, const Outgoing& o, SimTime at) {
  if (actor.kind != Principal::Kind::Replica || cuts_.empty()) return false;
  const auto* pp = std::get_if<Preprepare>(o.msg.get());
  if (pp == nullptr) return false;
  for (auto idx : cuts_) {
    const auto& a = cfg_.adversary.actions[idx];
    if (a.replica.index != actor.id || a.seq != pp->seq) continue;
    for (auto t : a.targets) send(actor, Principal::replica(t), o.msg, at, false, true);
    crashed_.at(actor.id) = true;
    TraceEvent e;
    e.time = at;
    e.kind = TraceKind::Crash;
    e.actor = actor;
    e.seq = pp->seq;
    e.text = "crash-stop mid-proposal";
    record(std::move(e));
    return true;
  }
  return false;
}

void Simulator::send(Principal from, Principal to, const MessagePtr& m, SimTime t, bool forged,
                     bool survives_crash) {
  const auto kind = kind_of(*m);
  if (from == to) {
    push(Event{t, 0, EvType::Deliver, from, to, m, {}, 0, false, survives_crash});
    return;
  }
  SimTime hold = 0;
  if (!forged) {
    for (auto idx : active_filters_) {
      const auto& a = cfg_.adversary.actions[idx];
      if (!a.filter.matches(from, to, kind)) continue;
      if (a.kind == AdversaryAction::Kind::DropMatching && t < a.until) {
        // Honest-to-honest drops end at global stabilization.
        if (byzantine(from) || t < cfg_.net.gst) {
          record_msg(TraceKind::Drop, t, from, to, *m);
          return;
        }
      } else if (a.kind == AdversaryAction::Kind::DelayMatching && t < a.until) {
        hold = std::max(hold, std::min(a.until, std::max(cfg_.net.gst, t)));
      }
    }
  }
  record_msg(forged ? TraceKind::ForgedSend : TraceKind::Send, t, from, to, *m);
  SimTime at = std::max(t, hold) + link_delay(from, to);
  push(Event{at, 0, EvType::Deliver, from, to, m, {}, 0, false, survives_crash});
}

void Simulator::apply(Principal actor, Effects fx, SimTime now) {
  for (auto& n : fx.notes) record(std::move(n));
  for (const auto& t : fx.timers) {
    Event e;
    e.at = t.at;
    e.type = actor.kind == Principal::Kind::Client ? EvType::ClientTimer : EvType::ReplicaTimer;
    e.to = actor;
    e.timer = t.ev;
    push(std::move(e));
  }
  for (const auto& o : fx.out) {
    const SimTime at = std::max(now, o.ready_at);
    if (const auto* pp = std::get_if<Preprepare>(o.msg.get())) {
      auto [it, fresh] = batch_seen_.try_emplace(pp->digest, pp->batch);
      if (!fresh && it->second != pp->batch) {
        abort(now, "digest collision between distinct batches");
        return;
      }
    }
    if (cut_proposal(actor, o, at)) return;
    switch (o.to) {
      case Outgoing::To::Replica:
        send(actor, Principal::replica(ReplicaId{o.id}), o.msg, at, false);
        break;
      case Outgoing::To::AllReplicas:
        for (std::uint32_t r = 0; r < cfg_.cfg.n; ++r) {
          send(actor, Principal::replica(ReplicaId{r}), o.msg, at, false);
        }
        break;
      case Outgoing::To::Client:
        send(actor, Principal::client(ClientId{o.id}), o.msg, at, false);
        break;
    }
  }
}

void Simulator::client_next(std::uint32_t c, SimTime now) {
  auto& cl = *clients_[c];
  if (!cl.idle() || batches_left_[c] == 0) return;
  --batches_left_[c];
  std::vector<Operation> ops;
  for (std::uint32_t i = 0; i < cfg_.cfg.batch_size; ++i) ops.push_back(streams_[c].next());
  apply(Principal::client(cl.id()), cl.submit(ops, now), now);
}

void Simulator::deliver(Event& e) {
  if (e.from.kind == Principal::Kind::Replica && crashed_[e.from.id] && !e.survives_crash) return;
  if (e.to.kind == Principal::Kind::Client) {
    std::uint32_t c = e.to.id - cfg_.first_client;
    if (c >= clients_.size()) return;
    const auto* r = std::get_if<Response>(e.msg.get());
    if (r == nullptr) return;
    VerificationContext ctx{*keys_, cfg_.kind, cfg_.cfg};
    if (!is_well_formed(*e.msg, ctx)) return;
    record_msg(TraceKind::Deliver, e.at, e.from, e.to, *e.msg);
    apply(e.to, clients_[c]->on_response(*r, e.at), e.at);
    client_next(c, e.at);
    return;
  }
  const std::uint32_t r = e.to.id;
  if (crashed_[r]) return;
  if (!e.charged && (cfg_.cost.per_message > 0 || cfg_.cost.per_verification > 0)) {
    SimTime start = std::max(e.at, cpu_free_[r]);
    cpu_free_[r] = start + cfg_.cost.per_message + (e.from == e.to ? 0 : cfg_.cost.per_verification);
    e.charged = true;
    if (cpu_free_[r] > e.at) {
      e.at = cpu_free_[r];
      push(std::move(e));
      return;
    }
  }
  if (e.from != e.to) {
    VerificationContext ctx{*keys_, cfg_.kind, cfg_.cfg};
    auto wf = is_well_formed(*e.msg, ctx);
    if (!wf) {
      TraceEvent t;
      t.time = e.at;
      t.kind = TraceKind::Rejected;
      t.actor = e.to;
      t.peer = e.from;
      t.view = view_of(*e.msg);
      t.seq = seq_of(*e.msg);
      t.a = static_cast<std::uint64_t>(kind_of(*e.msg));
      t.text = std::string(to_string(wf.reason));
      record(std::move(t));
      return;
    }
  }
  record_msg(TraceKind::Deliver, e.at, e.from, e.to, *e.msg);
  apply(e.to, replicas_[r]->on_message(*e.msg, e.at), e.at);
}

void Simulator::adversary(const AdversaryAction& a, SimTime now) {
  using K = AdversaryAction::Kind;
  auto note = [&](TraceKind k, std::string text) {
    TraceEvent e;
    e.time = now;
    e.kind = k;
    e.actor = Principal::replica(a.replica);
    e.text = std::move(text);
    record(std::move(e));
  };
  switch (a.kind) {
    case K::DelayMatching:
    case K::DropMatching:
      active_filters_.push_back(static_cast<std::size_t>(&a - cfg_.adversary.actions.data()));
      break;
    case K::SnapshotTC:
      snapshots_[a.label] = replicas_.at(a.replica.index)->tc().snapshot();
      break;
    case K::Rollback: {
      auto it = snapshots_.find(a.label);
      if (it == snapshots_.end()) {
        abort(now, "rollback to unknown snapshot " + a.label);
        return;
      }
      try {
        replicas_.at(a.replica.index)->tc().adversary_rollback(it->second, now);
        note(TraceKind::Rollback, a.label);
      } catch (const TrustedError& err) {
        abort(now, std::string("RollbackForbidden: ") + err.what());
      }
      break;
    }
    case K::CrashOnProposal:
      cuts_.push_back(static_cast<std::size_t>(&a - cfg_.adversary.actions.data()));
      break;
    case K::Crash:
      crashed_.at(a.replica.index) = true;
      note(TraceKind::Crash, "crash-stop");
      break;
    case K::ProposeAs: {
      if (!byzantine_.count(a.replica.index)) {
        abort(now, "forgery constraint: proposer is not byzantine");
        return;
      }
      SimTime ready = now;
      Preprepare pp;
      try {
        pp = replicas_[a.replica.index]->forge_preprepare(a.view, a.seq, a.batch, now, ready);
      } catch (const TrustedError& err) {
        abort(now, err.what());
        return;
      }
      auto m = std::make_shared<const ProtocolMessage>(std::move(pp));
      for (auto t : a.targets) {
        send(Principal::replica(a.replica), Principal::replica(t), m, std::max(now, ready), true);
      }
      break;
    }
    case K::SendForged: {
      if (!a.message) return;
      ProtocolMessage m = *a.message;
      const auto signer = auth_of(m).signer;
      if (!byzantine(signer)) {
        abort(now, "forgery constraint: signer " + to_string(signer) + " is honest");
        return;
      }
      const Attestation* att = nullptr;
      if (auto* pp = std::get_if<Preprepare>(&m); pp && pp->attestation) att = &*pp->attestation;
      if (auto* p = std::get_if<Prepare>(&m); p && p->attestation) att = &*p->attestation;
      if (att) {
        auto owner = keys_->owner_of(att->component);
        if (!owner || !byzantine_.count(owner->index) || !verify_attestation(*att, *keys_)) {
          abort(now, "forgery constraint: attestation not issued by a byzantine component");
          return;
        }
      }
      sign_message(m, signer, *keys_);
      auto ptr = std::make_shared<const ProtocolMessage>(std::move(m));
      for (auto t : a.targets) send(signer, Principal::replica(t), ptr, now, true);
      break;
    }
  }
}

Trace Simulator::run() {
  for (std::size_t i = 0; i < cfg_.adversary.actions.size(); ++i) {
    Event e;
    e.at = cfg_.adversary.actions[i].at;
    e.type = EvType::Adversary;
    e.action = i;
    push(std::move(e));
  }
  for (std::uint32_t c = 0; c < clients_.size(); ++c) client_next(c, 0);

  while (!queue_.empty() && !stopped_) {
    if (queue_.top().at > cfg_.horizon) break;
    Event e = queue_.top();
    queue_.pop();
    switch (e.type) {
      case EvType::Deliver:
        deliver(e);
        break;
      case EvType::ReplicaTimer:
        if (!crashed_[e.to.id]) apply(e.to, replicas_[e.to.id]->on_timer(e.timer, e.at), e.at);
        break;
      case EvType::ClientTimer: {
        std::uint32_t c = e.to.id - cfg_.first_client;
        apply(e.to, clients_[c]->on_timer(e.timer, e.at), e.at);
        break;
      }
      case EvType::Adversary:
        adversary(cfg_.adversary.actions[e.action], e.at);
        break;
    }
  }
  return std::move(trace_);
}

Trace simulate(const SimConfig& cfg) {
  Simulator s(cfg);
  return s.run();
}

}  // namespace trustlab
