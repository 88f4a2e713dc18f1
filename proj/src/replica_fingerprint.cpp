#include "trustlab/codec.hpp"
#include "trustlab/replica.hpp"

namespace trustlab {

namespace {

template <class T>
void put(Writer& w, const std::optional<T>& o);
template <class A, class B>
void put(Writer& w, const std::pair<A, B>& p);
template <class C>
  requires requires(C c) { c.begin(); c.size(); }
void put(Writer& w, const C& c);

void put(Writer& w, std::uint64_t v) { w.u64(v); }
void put(Writer& w, std::uint32_t v) { w.u32(v); }
void put(Writer& w, bool b) { w.boolean(b); }
void put(Writer& w, const Digest& d) { w.digest(d); }
void put(Writer& w, ClientId c) { w.u64(c.value); }
void put(Writer& w, const RequestKey& k) {
  put(w, k.client);
  w.u64(k.request_id);
}
template <class M>
  requires requires(M m) { ProtocolMessage{m}; }
void put(Writer& w, const M& m) {
  encode(w, ProtocolMessage{m});
}
void put(Writer& w, const ProtocolMessage& m) { encode(w, m); }
void put(Writer& w, const CommitCert& c) {
  w.u64(c.seq);
  w.u64(c.view);
  w.digest(c.digest);
  put(w, c.prepares.size());
  for (const auto& p : c.prepares) put(w, p);
}
template <class T>
void put(Writer& w, const std::optional<T>& o) {
  w.boolean(o.has_value());
  if (o) put(w, *o);
}
template <class A, class B>
void put(Writer& w, const std::pair<A, B>& p) {
  put(w, p.first);
  put(w, p.second);
}
template <class C>
  requires requires(C c) { c.begin(); c.size(); }
void put(Writer& w, const C& c) {
  put(w, c.size());
  for (const auto& e : c) put(w, e);
}

}  // namespace

Digest Replica::fingerprint() const {
  Writer w;
  put(w, id_.index);
  w.u8(static_cast<std::uint8_t>(opts_.kind));
  put(w, opts_.cfg.f);
  put(w, opts_.cfg.n);
  w.u8(static_cast<std::uint8_t>(opts_.persistence));
  w.i64(opts_.access_latency);
  put(w, opts_.counter_lanes);
  put(w, opts_.pipeline_width);
  w.i64(opts_.view_change_timeout);
  put(w, opts_.all_n_client);
  put(w, opts_.cfg.batch_size);
  put(w, opts_.cfg.checkpoint_period);
  w.digest(tc_->fingerprint());
  put(w, view_);
  put(w, vc_target_);
  put(w, own_counter_);
  put(w, primary_counter_);
  put(w, slots_.size());
  for (const auto& [s, slot] : slots_) {
    put(w, s);
    put(w, slot.pp);
    put(w, slot.prepares);
    put(w, slot.commits);
    put(w, slot.acks);
    for (bool b : {slot.prepare_sent, slot.prepared, slot.commit_sent, slot.committed,
                   slot.primary_done}) {
      put(w, b);
    }
    put(w, slot.conflicts);
  }
  put(w, next_ordered_);
  put(w, next_commit_);
  put(w, reorder_);
  put(w, seen_in_view_);
  put(w, pending_);
  put(w, queued_);
  put(w, prebound_);
  w.i64(prebound_ready_);
  put(w, in_flight_);
  put(w, next_seq_);
  put(w, kv_);
  put(w, watermark_);
  put(w, exec_log_.size());
  for (const auto& [s, e] : exec_log_) {
    put(w, s);
    put(w, e.digest);
    put(w, e.view);
    put(w, e.request);
    w.boolean(e.undo.has_value());
    if (e.undo) {
      put(w, e.undo->kv);
      w.boolean(e.undo->cache.has_value());
      if (e.undo->cache) {
        put(w, e.undo->cache->first);
        w.boolean(e.undo->cache->second.has_value());
        if (const auto& c = e.undo->cache->second) {
          put(w, c->request_id);
          put(w, c->seq);
          put(w, c->responses);
        }
      }
    }
  }
  put(w, reply_cache_.size());
  for (const auto& [client, c] : reply_cache_) {
    put(w, client);
    put(w, c.request_id);
    put(w, c.seq);
    put(w, c.responses);
  }
  put(w, stable_seq_);
  put(w, own_checkpoints_);
  put(w, checkpoint_votes_.size());
  for (const auto& [s, votes] : checkpoint_votes_) {
    put(w, s);
    put(w, votes.by_digest);
    put(w, votes.sample);
  }
  put(w, carried_);
  put(w, certs_);
  put(w, vcs_);
  put(w, new_view_sent_);
  w.boolean(last_new_view_ != nullptr);
  if (last_new_view_) put(w, *last_new_view_);
  put(w, future_);
  put(w, escalations_);
  put(w, next_timer_id_);
  put(w, live_timers_);
  put(w, forward_timers_);
  return digest_of(w.buffer());
}

}  // namespace trustlab
