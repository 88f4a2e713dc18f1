#include "trustlab/replica.hpp"

#include <algorithm>
#include <cassert>

#include "trustlab/codec.hpp"

namespace trustlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

RequestKey key_of(const Batch& b) { return {b.front().client, b.front().nonce}; }

}  // namespace

Replica::Replica(ReplicaId id, ReplicaOptions opts, const KeyRing& keys)
    : id_(id),
      opts_(std::move(opts)),
      traits_(traits(opts_.kind)),
      quorums_(quorums(opts_.kind, opts_.cfg, opts_.all_n_client)),
      keys_(keys),
      tc_(std::make_unique<TrustedComponent>(id.index, opts_.persistence, opts_.access_latency,
                                             opts_.counter_lanes, keys)) {
  own_counter_ = tc_->create(0, 0).q;
  primary_counter_[0] = own_counter_;
}

SlotStatus Replica::status(Seq s) const {
  if (s <= watermark_) return SlotStatus::Executed;
  auto it = slots_.find(s);
  if (it == slots_.end() || !it->second.pp) return SlotStatus::None;
  if (it->second.committed) return SlotStatus::Committed;
  if (it->second.prepared) return SlotStatus::Prepared;
  return SlotStatus::Preprepared;
}

std::optional<Digest> Replica::executed_digest(Seq s) const {
  auto it = exec_log_.find(s);
  if (it == exec_log_.end()) return std::nullopt;
  return it->second.digest;
}

Digest Replica::state_digest(const std::map<std::uint64_t, std::uint64_t>& kv, Seq watermark) {
  Writer w;
  w.u64(watermark);
  w.u64(kv.size());
  for (const auto& [k, v] : kv) {
    w.u64(k);
    w.u64(v);
  }
  return digest_of(w.buffer());
}

bool Replica::ordered_backups() const {
  return traits_.attest == AttestStyle::Log || traits_.attest == AttestStyle::Counter;
}

bool Replica::counter_kind() const {
  return traits_.attest == AttestStyle::Counter || traits_.attest == AttestStyle::PrimaryOnly;
}

template <class M>
MessagePtr Replica::sign(M m) const {
  ProtocolMessage pm{std::move(m)};
  sign_message(pm, Principal::replica(id_), keys_);
  return std::make_shared<const ProtocolMessage>(std::move(pm));
}

template MessagePtr Replica::sign<Preprepare>(Preprepare) const;
template MessagePtr Replica::sign<ViewChange>(ViewChange) const;
template MessagePtr Replica::sign<NewView>(NewView) const;

void Replica::broadcast(MessagePtr m, SimTime ready, Effects& fx) const {
  fx.out.push_back({Outgoing::To::AllReplicas, 0, std::move(m), ready});
}

void Replica::unicast(ReplicaId to, MessagePtr m, SimTime ready, Effects& fx) const {
  fx.out.push_back({Outgoing::To::Replica, to.index, std::move(m), ready});
}

void Replica::to_client(ClientId c, MessagePtr m, SimTime ready, Effects& fx) const {
  fx.out.push_back({Outgoing::To::Client, c.value, std::move(m), ready});
}

void Replica::arm(TimerEvent ev, SimTime at, Effects& fx) {
  ev.id = next_timer_id_++;
  live_timers_.insert(ev.id);
  fx.timers.push_back({ev, at});
}

void Replica::note(Effects& fx, SimTime now, TraceKind k, View v, Seq s, const Digest& d,
                   std::uint64_t a, std::uint64_t b, std::string text) const {
  TraceEvent e;
  e.time = now;
  e.kind = k;
  e.actor = Principal::replica(id_);
  e.view = v;
  e.seq = s;
  e.digest = d;
  e.a = a;
  e.b = b;
  e.text = std::move(text);
  fx.notes.push_back(std::move(e));
}

Effects Replica::on_message(const ProtocolMessage& msg, SimTime now) {
  Effects fx;
  dispatch(msg, now, fx);
  return fx;
}

void Replica::dispatch(const ProtocolMessage& msg, SimTime now, Effects& fx) {
  // Phase messages for a later view wait until that view is installed; older ones are stale.
  auto gate = [&](View v) {
    if (v > view_) {
      future_.push_back(msg);
      return false;
    }
    return v == view_ && !in_view_change();
  };
  std::visit(Overloaded{
                 [&](const Request& m) { on_request(m, now, fx); },
                 [&](const Preprepare& m) {
                   if (gate(m.view)) on_preprepare(m, now, fx);
                 },
                 [&](const Prepare& m) {
                   if (gate(m.view)) on_prepare(m, now, fx);
                 },
                 [&](const Commit& m) {
                   if (gate(m.view)) on_commit(m, now, fx);
                 },
                 [&](const Response&) {},
                 [&](const Checkpoint& m) { on_checkpoint(m, now, fx); },
                 [&](const ViewChange& m) { on_view_change(m, now, fx); },
                 [&](const NewView& m) { on_new_view(m, now, fx); },
             },
             msg);
}

Effects Replica::on_timer(const TimerEvent& ev, SimTime now) {
  Effects fx;
  if (live_timers_.erase(ev.id) == 0) return fx;
  switch (ev.kind) {
    case TimerKind::RequestForwarded: {
      forward_timers_.erase(ev.request);
      auto c = reply_cache_.find(ev.request.client);
      bool executed = c != reply_cache_.end() && c->second.request_id >= ev.request.request_id;
      if (ev.view == view_ && !in_view_change() && !executed && !seen_in_view_.count(ev.request)) {
        start_view_change(view_ + 1, now, fx, "request not proposed");
      }
      break;
    }
    case TimerKind::ViewChangeTimer:
      if (in_view_change() && vc_target_ == ev.view) {
        start_view_change(vc_target_ + 1, now, fx, "view change timed out");
      }
      break;
    case TimerKind::ClientRetry:
    case TimerKind::CheckpointTick:
      break;
  }
  return fx;
}

// ---------------------------------------------------------------------------------------
// Requests and proposals

void Replica::on_request(const Request& m, SimTime now, Effects& fx) {
  auto c = reply_cache_.find(m.client);
  if (c != reply_cache_.end() && c->second.request_id >= m.request_id) {
    if (c->second.request_id == m.request_id) resend(c->second, now, fx);
    return;
  }
  const View target = std::max(view_, vc_target_);
  if (opts_.cfg.primary_of(target) == id_) {
    if (queued_.insert(m.key()).second) pending_.push_back(m);
    try_propose(now, fx);
    return;
  }
  if (in_view_change() || seen_in_view_.count(m.key())) return;
  unicast(opts_.cfg.primary_of(view_), std::make_shared<const ProtocolMessage>(m), now, fx);
  if (!forward_timers_.count(m.key())) {
    TimerEvent ev{TimerKind::RequestForwarded, 0, view_, m.key()};
    arm(ev, now + opts_.view_change_timeout, fx);
    forward_timers_[m.key()] = next_timer_id_ - 1;
  }
}

Preprepare Replica::bind(View v, Batch batch, Seq s, SimTime now, SimTime& ready_at) {
  Preprepare pp;
  pp.view = v;
  pp.seq = s;
  pp.from = id_;
  pp.digest = batch_digest(batch);
  pp.batch = std::move(batch);
  ready_at = now;
  switch (traits_.attest) {
    case AttestStyle::None:
      break;
    case AttestStyle::Log: {
      auto q = log_id(v, LogPhase::Preprepare);
      tc_->open_log(q);
      auto c = tc_->log_append(q, s, pp.digest, now);
      pp.attestation = c.att;
      ready_at = c.ready_at;
      break;
    }
    case AttestStyle::Counter:
    case AttestStyle::PrimaryOnly: {
      auto q = primary_counter_.count(v) ? primary_counter_[v] : own_counter_;
      auto c = tc_->append_f(q, pp.digest, now);
      pp.seq = c.k;
      pp.attestation = c.att;
      ready_at = c.ready_at;
      break;
    }
  }
  return pp;
}

Preprepare Replica::forge_preprepare(View v, Seq s, Batch batch, SimTime now, SimTime& ready_at) {
  auto pp = bind(v, std::move(batch), s, now, ready_at);
  ProtocolMessage pm{pp};
  sign_message(pm, Principal::replica(id_), keys_);
  return std::get<Preprepare>(pm);
}

void Replica::try_propose(SimTime now, Effects& fx) {
  if (!is_primary()) return;
  auto take = [&]() -> std::optional<Request> {
    while (!pending_.empty()) {
      Request r = std::move(pending_.front());
      pending_.pop_front();
      auto c = reply_cache_.find(r.client);
      if (c != reply_cache_.end() && c->second.request_id >= r.request_id) {
        queued_.erase(r.key());
        continue;
      }
      return r;
    }
    return std::nullopt;
  };
  auto launch = [&](const Preprepare& pp, SimTime ready) {
    in_flight_.insert(pp.seq);
    auto k = key_of(pp.batch);
    note(fx, now, TraceKind::Proposed, pp.view, pp.seq, pp.digest, k.client.value, k.request_id);
    broadcast(sign(pp), std::max(now, ready), fx);
  };
  try {
    if (traits_.sequential) {
      // One proposal in flight; the next batch is bound ahead so the component access
      // overlaps with the current round.
      while (true) {
        if (!prebound_) {
          auto r = take();
          if (!r) break;
          prebound_ = bind(view_, std::move(r->batch), next_seq_, now, prebound_ready_);
          next_seq_ = prebound_->seq + 1;
        }
        if (!in_flight_.empty()) break;
        auto pp = std::move(*prebound_);
        prebound_.reset();
        launch(pp, prebound_ready_);
      }
    } else {
      while (in_flight_.size() < opts_.pipeline_width) {
        auto r = take();
        if (!r) break;
        SimTime ready = now;
        auto pp = bind(view_, std::move(r->batch), next_seq_, now, ready);
        next_seq_ = pp.seq + 1;
        launch(pp, ready);
      }
    }
  } catch (const TrustedError& e) {
    note(fx, now, TraceKind::Rejected, view_, next_seq_, {}, 0, 0, e.what());
  }
}

// ---------------------------------------------------------------------------------------
// Agreement

void Replica::on_preprepare(const Preprepare& m, SimTime now, Effects& fx) {
  if (m.seq <= stable_seq_) return;
  if (counter_kind()) {
    auto it = primary_counter_.find(view_);
    if (it == primary_counter_.end() || m.attestation->q != it->second) {
      note(fx, now, TraceKind::Rejected, m.view, m.seq, m.digest,
           static_cast<std::uint64_t>(MessageKind::Preprepare), 0, "counter not bound to view");
      return;
    }
  }
  if (!ordered_backups()) {
    accept_preprepare(m, now, fx);
    return;
  }
  // Trusted logs and counters must be written in sequence order at every replica.
  if (m.seq > next_ordered_) {
    reorder_.try_emplace(m.seq, m);
    return;
  }
  accept_preprepare(m, now, fx);
  while (true) {
    auto it = reorder_.find(next_ordered_);
    if (it == reorder_.end()) break;
    auto pp = std::move(it->second);
    reorder_.erase(it);
    accept_preprepare(pp, now, fx);
  }
}

void Replica::accept_preprepare(const Preprepare& m, SimTime now, Effects& fx) {
  auto& slot = slots_[m.seq];
  if (slot.pp) {
    if (slot.pp->digest != m.digest &&
        std::find(slot.conflicts.begin(), slot.conflicts.end(), m) == slot.conflicts.end()) {
      slot.conflicts.push_back(m);
      note(fx, now, TraceKind::Rejected, m.view, m.seq, m.digest,
           static_cast<std::uint64_t>(MessageKind::Preprepare), 0, "conflicting proposal");
    }
    return;
  }
  slot.pp = m;
  carried_[m.seq] = m;
  if (!is_noop_batch(m.batch)) seen_in_view_.insert(key_of(m.batch));
  if (ordered_backups() && m.seq >= next_ordered_) next_ordered_ = m.seq + 1;

  if (traits_.speculative) {
    if (m.seq <= watermark_) {
      resend_seq(m.seq, m.digest, now, fx);
      send_ack(m.seq, m.digest, now, fx);
    } else {
      try_execute(now, fx);
    }
    return;
  }
  if (m.from != id_) send_prepare(m, now, fx);
  check_prepared(m.seq, now, fx);
}

void Replica::send_prepare(const Preprepare& pp, SimTime now, Effects& fx) {
  auto& slot = slots_[pp.seq];
  Prepare p;
  p.view = pp.view;
  p.seq = pp.seq;
  p.from = id_;
  p.digest = pp.digest;
  SimTime ready = now;
  try {
    switch (traits_.attest) {
      case AttestStyle::None:
        break;
      case AttestStyle::Log: {
        auto q = log_id(pp.view, LogPhase::Prepare);
        tc_->open_log(q);
        auto c = tc_->log_append(q, pp.seq, pp.digest, now);
        p.attestation = c.att;
        ready = c.ready_at;
        break;
      }
      case AttestStyle::Counter: {
        auto c = tc_->append_f(own_counter_, pp.digest, now);
        p.attestation = c.att;
        ready = c.ready_at;
        break;
      }
      case AttestStyle::PrimaryOnly:
        p.attestation = pp.attestation;
        break;
    }
  } catch (const TrustedError& e) {
    note(fx, now, TraceKind::Rejected, pp.view, pp.seq, pp.digest,
         static_cast<std::uint64_t>(MessageKind::Prepare), 0, e.what());
    return;
  }
  slot.prepare_sent = true;
  broadcast(sign(p), ready, fx);
}

void Replica::on_prepare(const Prepare& m, SimTime now, Effects& fx) {
  if (m.seq <= stable_seq_ || m.from == opts_.cfg.primary_of(view_)) return;
  auto& slot = slots_[m.seq];
  if (!slot.prepares.try_emplace(m.from.index, m).second) return;
  check_prepared(m.seq, now, fx);
}

void Replica::check_prepared(Seq s, SimTime now, Effects& fx) {
  auto& slot = slots_[s];
  if (!slot.pp || slot.prepared) return;
  CommitCert cert{s, slot.pp->view, slot.pp->digest, {}};
  for (const auto& [from, p] : slot.prepares) {
    if (p.digest == slot.pp->digest) cert.prepares.push_back(p);
  }
  if (cert.prepares.size() + 1 < quorums_.prepare) return;
  slot.prepared = true;
  certs_[s] = std::move(cert);
  if (!traits_.commit_phase) {
    mark_committed(s, now, fx);
  } else if (traits_.attest == AttestStyle::Log) {
    emit_commits(now, fx);
  } else {
    send_commit(s, now, fx);
  }
}

void Replica::emit_commits(SimTime now, Effects& fx) {
  while (true) {
    auto it = slots_.find(next_commit_);
    if (it == slots_.end() || !it->second.prepared) break;
    if (!it->second.commit_sent) send_commit(next_commit_, now, fx);
    ++next_commit_;
  }
}

void Replica::send_commit(Seq s, SimTime now, Effects& fx) {
  auto& slot = slots_[s];
  Commit c;
  c.view = slot.pp->view;
  c.seq = s;
  c.from = id_;
  c.digest = slot.pp->digest;
  SimTime ready = now;
  if (traits_.attest == AttestStyle::Log) {
    try {
      auto q = log_id(c.view, LogPhase::Commit);
      tc_->open_log(q);
      auto r = tc_->log_append(q, s, c.digest, now);
      c.attestation = r.att;
      ready = r.ready_at;
    } catch (const TrustedError& e) {
      note(fx, now, TraceKind::Rejected, c.view, s, c.digest,
           static_cast<std::uint64_t>(MessageKind::Commit), 0, e.what());
      return;
    }
  }
  slot.commit_sent = true;
  broadcast(sign(c), ready, fx);
  check_committed(s, now, fx);
}

void Replica::on_commit(const Commit& m, SimTime now, Effects& fx) {
  if (m.seq <= stable_seq_) return;
  auto& slot = slots_[m.seq];
  if (traits_.speculative) {
    // Execution acknowledgement from a backup.
    if (opts_.cfg.primary_of(view_) != id_) return;
    if (slot.pp && slot.pp->digest != m.digest) return;
    slot.acks.insert(m.from.index);
    if (slot.pp && m.seq <= watermark_ && slot.acks.size() + 1 >= quorums_.client) {
      primary_done(m.seq, now, fx);
    }
    return;
  }
  if (!slot.commits.try_emplace(m.from.index, m.digest).second) return;
  check_committed(m.seq, now, fx);
}

void Replica::check_committed(Seq s, SimTime now, Effects& fx) {
  auto& slot = slots_[s];
  if (!slot.pp || !slot.prepared || slot.committed) return;
  std::size_t n = 0;
  for (const auto& [from, d] : slot.commits) n += d == slot.pp->digest;
  if (n >= quorums_.commit) mark_committed(s, now, fx);
}

void Replica::mark_committed(Seq s, SimTime now, Effects& fx) {
  auto& slot = slots_[s];
  slot.committed = true;
  note(fx, now, TraceKind::Committed, slot.pp->view, s, slot.pp->digest);
  if (slot.pp->from == id_) primary_done(s, now, fx);
  if (s <= watermark_) resend_seq(s, slot.pp->digest, now, fx);
  try_execute(now, fx);
}

void Replica::primary_done(Seq s, SimTime now, Effects& fx) {
  auto& slot = slots_[s];
  if (slot.primary_done) return;
  slot.primary_done = true;
  if (in_flight_.erase(s) > 0) note(fx, now, TraceKind::PrimaryCommitted, view_, s, slot.pp->digest);
  try_propose(now, fx);
}

// ---------------------------------------------------------------------------------------
// Execution

void Replica::try_execute(SimTime now, Effects& fx) {
  while (true) {
    auto it = slots_.find(watermark_ + 1);
    if (it == slots_.end() || !it->second.pp) break;
    if (!traits_.speculative && !it->second.committed) break;
    execute(watermark_ + 1, *it->second.pp, now, fx);
  }
}

void Replica::execute(Seq s, const Preprepare& pp, SimTime now, Effects& fx) {
  ExecRecord rec;
  rec.digest = pp.digest;
  rec.view = view_;
  if (traits_.speculative) rec.undo.emplace();
  const bool noop = is_noop_batch(pp.batch);
  std::optional<CachedReply> replies;
  if (!noop) {
    rec.request = key_of(pp.batch);
    auto c = reply_cache_.find(rec.request.client);
    bool duplicate = c != reply_cache_.end() && c->second.request_id >= rec.request.request_id;
    if (duplicate) {
      if (c->second.request_id == rec.request.request_id) replies = c->second;
    } else {
      CachedReply fresh{rec.request.request_id, s, {}};
      for (const auto& t : pp.batch) {
        std::optional<std::uint64_t> result;
        std::visit(Overloaded{
                       [&](const Put& op) {
                         auto it = kv_.find(op.key);
                         if (it != kv_.end()) result = it->second;
                         if (rec.undo) rec.undo->kv.emplace_back(op.key, result);
                         kv_[op.key] = op.value;
                       },
                       [&](const Get& op) {
                         auto it = kv_.find(op.key);
                         if (it != kv_.end()) result = it->second;
                       },
                       [&](const Noop&) {},
                   },
                   t.op);
        Response r;
        r.view = view_;
        r.seq = s;
        r.txn = t.id();
        r.request_id = rec.request.request_id;
        r.result = result;
        r.replica = id_;
        fresh.responses.push_back(std::move(r));
      }
      if (rec.undo) {
        std::optional<CachedReply> prev;
        if (c != reply_cache_.end()) prev = c->second;
        rec.undo->cache = std::make_pair(rec.request.client, std::move(prev));
      }
      reply_cache_[rec.request.client] = fresh;
      replies = std::move(fresh);
    }
    queued_.erase(rec.request);
  }
  watermark_ = s;
  note(fx, now, TraceKind::Executed, view_, s, pp.digest,
       noop ? ClientId::system().value : rec.request.client.value, rec.request.request_id);
  exec_log_[s] = std::move(rec);
  if (replies) resend(*replies, now, fx);
  if (traits_.speculative) send_ack(s, pp.digest, now, fx);
  maybe_checkpoint(now, fx);
}

void Replica::resend(const CachedReply& c, SimTime now, Effects& fx) {
  for (auto r : c.responses) {
    r.view = view_;
    auto client = r.txn.client;
    to_client(client, sign(std::move(r)), now, fx);
  }
}

void Replica::resend_seq(Seq s, const Digest& d, SimTime now, Effects& fx) {
  auto it = exec_log_.find(s);
  if (it == exec_log_.end()) return;
  if (it->second.digest != d) {
    note(fx, now, TraceKind::Divergence, view_, s, d, 0, 0, "re-proposal differs from execution");
    return;
  }
  auto c = reply_cache_.find(it->second.request.client);
  if (c != reply_cache_.end() && c->second.seq == s) resend(c->second, now, fx);
}

void Replica::send_ack(Seq s, const Digest& d, SimTime now, Effects& fx) {
  auto primary = opts_.cfg.primary_of(view_);
  if (primary == id_) {
    auto& slot = slots_[s];
    if (slot.acks.size() + 1 >= quorums_.client) primary_done(s, now, fx);
    return;
  }
  Commit ack;
  ack.view = view_;
  ack.seq = s;
  ack.from = id_;
  ack.digest = d;
  unicast(primary, sign(ack), now, fx);
}

// ---------------------------------------------------------------------------------------
// Checkpoints

void Replica::maybe_checkpoint(SimTime now, Effects& fx) {
  const Seq period = opts_.cfg.checkpoint_period;
  if (period == 0 || watermark_ % period != 0 || watermark_ <= stable_seq_) return;
  if (own_checkpoints_.count(watermark_)) return;
  Checkpoint cp;
  cp.seq = watermark_;
  cp.from = id_;
  cp.state_digest = state_digest(kv_, watermark_);
  auto it = slots_.find(watermark_);
  if (it != slots_.end() && it->second.pp) {
    if (it->second.pp->attestation) cp.proof.attestations.push_back(*it->second.pp->attestation);
    auto c = certs_.find(watermark_);
    if (traits_.flexi && c != certs_.end()) cp.proof.certs.push_back(c->second);
  }
  cp.snapshot.assign(kv_.begin(), kv_.end());
  own_checkpoints_[watermark_] = cp.state_digest;
  broadcast(sign(std::move(cp)), now, fx);
}

void Replica::on_checkpoint(const Checkpoint& m, SimTime now, Effects& fx) {
  if (m.seq <= stable_seq_) return;
  auto& votes = checkpoint_votes_[m.seq];
  for (const auto& [d, who] : votes.by_digest) {
    if (who.count(m.from.index)) return;
  }
  auto& who = votes.by_digest[m.state_digest];
  who.insert(m.from.index);
  votes.sample.try_emplace(m.state_digest, m);
  if (who.size() >= quorums_.checkpoint) {
    auto sample = votes.sample.at(m.state_digest);
    make_stable(m.seq, m.state_digest, sample, now, fx);
  }
}

void Replica::make_stable(Seq s, const Digest& d, const Checkpoint& sample, SimTime now,
                          Effects& fx) {
  if (watermark_ >= s) {
    auto own = own_checkpoints_.find(s);
    if (own != own_checkpoints_.end() && own->second != d) {
      note(fx, now, TraceKind::Divergence, view_, s, d, 0, 0, "checkpoint digest mismatch");
    }
  } else {
    kv_.clear();
    kv_.insert(sample.snapshot.begin(), sample.snapshot.end());
    watermark_ = s;
    note(fx, now, TraceKind::StateAdopted, view_, s, d);
  }
  stable_seq_ = s;
  note(fx, now, TraceKind::CheckpointStable, view_, s, d);
  auto below = [s](auto& m) { m.erase(m.begin(), m.upper_bound(s)); };
  below(slots_);
  below(exec_log_);
  below(carried_);
  below(certs_);
  below(checkpoint_votes_);
  below(reorder_);
  own_checkpoints_.erase(own_checkpoints_.begin(), own_checkpoints_.lower_bound(s));
  while (!in_flight_.empty() && *in_flight_.begin() <= s) {
    note(fx, now, TraceKind::PrimaryCommitted, view_, *in_flight_.begin(), {});
    in_flight_.erase(in_flight_.begin());
  }
  next_ordered_ = std::max(next_ordered_, s + 1);
  next_commit_ = std::max(next_commit_, s + 1);
  next_seq_ = std::max(next_seq_, s + 1);
  try_execute(now, fx);
  try_propose(now, fx);
}

}  // namespace trustlab
