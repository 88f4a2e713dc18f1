#include "trustlab/client.hpp"

#include <algorithm>

#include "trustlab/codec.hpp"

namespace trustlab {

ClientSession::ClientSession(ClientId id, ClientOptions opts, const KeyRing& keys)
    : id_(id),
      opts_(std::move(opts)),
      keys_(keys),
      match_view_(traits(opts_.kind).speculative),
      quorum_(quorums(opts_.kind, opts_.cfg, opts_.all_n_client).client) {}

void ClientSession::note(Effects& fx, SimTime now, TraceKind k, View v, Seq s, const Digest& d,
                         std::uint64_t a, std::uint64_t b) const {
  TraceEvent e;
  e.time = now;
  e.kind = k;
  e.actor = Principal::client(id_);
  e.view = v;
  e.seq = s;
  e.digest = d;
  e.a = a;
  e.b = b;
  fx.notes.push_back(std::move(e));
}

Effects ClientSession::submit(const std::vector<Operation>& ops, SimTime now) {
  Effects fx;
  if (outstanding_ || ops.empty()) return fx;
  Request req;
  req.client = id_;
  req.request_id = next_nonce_;
  for (const auto& op : ops) req.batch.push_back(Transaction{id_, next_nonce_++, op});
  Outstanding o;
  o.request_id = req.request_id;
  o.size = req.batch.size();
  o.digest = batch_digest(req.batch);
  o.submitted = now;
  o.timeout = opts_.retry_timeout;
  ProtocolMessage pm{std::move(req)};
  sign_message(pm, Principal::client(id_), keys_);
  o.request = std::make_shared<const ProtocolMessage>(std::move(pm));
  outstanding_ = std::move(o);
  note(fx, now, TraceKind::ClientSubmit, view_hint_, 0, outstanding_->digest,
       outstanding_->request_id, outstanding_->size);
  fx.out.push_back({Outgoing::To::Replica, opts_.cfg.primary_of(view_hint_).index,
                    outstanding_->request, now});
  arm_retry(now, fx);
  return fx;
}

void ClientSession::arm_retry(SimTime now, Effects& fx) {
  TimerEvent ev{TimerKind::ClientRetry, next_timer_++, 0, {id_, outstanding_->request_id}};
  outstanding_->timer = ev.id;
  fx.timers.push_back({ev, now + outstanding_->timeout});
}

Effects ClientSession::on_response(const Response& r, SimTime now) {
  Effects fx;
  view_hint_ = std::max(view_hint_, r.view);
  if (!outstanding_ || r.request_id != outstanding_->request_id || r.txn.client != id_) return fx;
  auto& o = *outstanding_;
  if (r.txn.nonce < o.request_id || r.txn.nonce >= o.request_id + o.size) return fx;

  auto& mine = o.latest[r.replica.index];
  const View v = match_view_ ? r.view : 0;
  if (mine.seq != r.seq || mine.view != v) mine = Reply{r.seq, v, {}};
  mine.results[r.txn.nonce] = r.result;
  if (mine.results.size() != o.size) return fx;

  std::uint32_t agree = 0;
  for (const auto& [rep, reply] : o.latest) agree += reply == mine;
  if (agree < quorum_) return fx;

  Completion c;
  c.request_id = o.request_id;
  c.seq = mine.seq;
  c.view = r.view;
  for (const auto& [nonce, res] : mine.results) c.results.push_back(res);
  c.latency = now - o.submitted;
  note(fx, now, TraceKind::ClientComplete, r.view, mine.seq, o.digest, o.request_id,
       static_cast<std::uint64_t>(c.latency));
  done_.push_back(std::move(c));
  outstanding_.reset();
  return fx;
}

Effects ClientSession::on_timer(const TimerEvent& ev, SimTime now) {
  Effects fx;
  if (!outstanding_ || ev.id != outstanding_->timer) return fx;
  note(fx, now, TraceKind::ClientTimeout, view_hint_, 0, outstanding_->digest,
       outstanding_->request_id, 0);
  fx.out.push_back({Outgoing::To::AllReplicas, 0, outstanding_->request, now});
  outstanding_->timeout = std::min(outstanding_->timeout * 2, opts_.max_retry_timeout);
  arm_retry(now, fx);
  return fx;
}

}  // namespace trustlab
