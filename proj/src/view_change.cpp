#include <algorithm>

#include "trustlab/codec.hpp"
#include "trustlab/replica.hpp"

namespace trustlab {

NewViewPlan plan_new_view(const std::vector<ViewChange>& vcs) {
  NewViewPlan plan;
  for (const auto& vc : vcs) plan.h = std::max(plan.h, vc.stable_seq);
  std::map<Seq, const Preprepare*> best;
  for (const auto& vc : vcs) {
    for (const auto& pp : vc.prepared_set) {
      if (pp.seq <= plan.h) continue;
      auto [it, fresh] = best.try_emplace(pp.seq, &pp);
      if (fresh) continue;
      const Preprepare& cur = *it->second;
      if (pp.view == cur.view && pp.digest != cur.digest) {
        if (std::find(plan.conflicts.begin(), plan.conflicts.end(), pp.seq) == plan.conflicts.end()) {
          plan.conflicts.push_back(pp.seq);
        }
      }
      // Highest view wins, then the smaller digest.
      if (pp.view > cur.view || (pp.view == cur.view && pp.digest < cur.digest)) it->second = &pp;
    }
  }
  const Seq top = best.empty() ? plan.h : best.rbegin()->first;
  for (Seq s = plan.h + 1; s <= top; ++s) {
    auto it = best.find(s);
    if (it == best.end()) {
      auto b = noop_batch(s);
      plan.entries.push_back({s, batch_digest(b), true});
      plan.batches.emplace(s, std::move(b));
    } else {
      plan.entries.push_back({s, it->second->digest, false});
      plan.batches.emplace(s, it->second->batch);
    }
  }
  return plan;
}

void Replica::start_view_change(View target, SimTime now, Effects& fx, std::string_view reason) {
  if (target <= vc_target_ || target <= view_) return;
  vc_target_ = target;
  live_timers_.clear();
  forward_timers_.clear();
  if (prebound_) {
    // The bound proposal is abandoned; its request goes back to the queue.
    Request r;
    r.client = prebound_->batch.front().client;
    r.request_id = prebound_->batch.front().nonce;
    r.batch = prebound_->batch;
    pending_.push_front(std::move(r));
    prebound_.reset();
  }

  ViewChange vc;
  vc.new_view = target;
  vc.from = id_;
  vc.stable_seq = stable_seq_;
  for (const auto& [s, pp] : carried_) {
    if (s > stable_seq_) vc.prepared_set.push_back(pp);
  }
  if (!traits_.speculative) {
    for (const auto& [s, c] : certs_) {
      if (s > stable_seq_) vc.committed_set.push_back(c);
    }
  }
  broadcast(sign(std::move(vc)), now, fx);
  note(fx, now, TraceKind::ViewChangeStarted, target, 0, {}, 0, 0, std::string(reason));

  SimTime wait = opts_.view_change_timeout << std::min<std::uint32_t>(escalations_, 6);
  ++escalations_;
  arm(TimerEvent{TimerKind::ViewChangeTimer, 0, target, {}}, now + wait, fx);
}

void Replica::on_view_change(const ViewChange& m, SimTime now, Effects& fx) {
  const View w = m.new_view;
  if (w <= view_) {
    // A straggler still asking for a view we already run; help it catch up.
    if (w == view_ && last_new_view_ && opts_.cfg.primary_of(w) == id_) {
      unicast(m.from, last_new_view_, now, fx);
    }
    return;
  }
  vcs_[w].try_emplace(m.from.index, m);
  if (vc_target_ < w && vcs_[w].size() >= quorums_.join_view_change) {
    start_view_change(w, now, fx, "joined");
  }
  maybe_assemble(w, now, fx);
}

void Replica::maybe_assemble(View w, SimTime now, Effects& fx) {
  if (opts_.cfg.primary_of(w) != id_ || vc_target_ != w || new_view_sent_.count(w)) return;
  auto& got = vcs_[w];
  if (got.size() < quorums_.new_view) return;

  NewView nv;
  nv.new_view = w;
  nv.from = id_;
  for (const auto& [from, vc] : got) nv.viewchange_set.push_back(vc);
  auto plan = plan_new_view(nv.viewchange_set);
  nv.repropose_list = plan.entries;

  std::vector<Preprepare> reproposals;
  SimTime ready = now;
  try {
    if (counter_kind()) {
      auto c = tc_->create(plan.h, now);
      primary_counter_[w] = c.q;
      nv.counter_cert = c.att;
    }
    for (const auto& e : plan.entries) {
      SimTime at = now;
      reproposals.push_back(bind(w, plan.batches.at(e.seq), e.seq, now, at));
      ready = std::max(ready, at);
    }
  } catch (const TrustedError& err) {
    note(fx, now, TraceKind::Rejected, w, 0, {}, 0, 0, err.what());
    return;
  }
  new_view_sent_.insert(w);
  for (Seq s : plan.conflicts) {
    note(fx, now, TraceKind::ConflictingReports, w, s, {}, 0, 0, "same view, different digests");
  }
  for (const auto& e : plan.entries) {
    note(fx, now, TraceKind::Reproposed, w, e.seq, e.digest, e.noop ? 1 : 0);
  }
  last_new_view_ = sign(std::move(nv));
  broadcast(last_new_view_, ready, fx);
  for (auto& pp : reproposals) broadcast(sign(std::move(pp)), ready, fx);
}

void Replica::on_new_view(const NewView& m, SimTime now, Effects& fx) {
  const View w = m.new_view;
  if (w <= view_) return;
  auto invalid = [&](const char* why) {
    note(fx, now, TraceKind::InvalidNewView, w, 0, {}, 0, 0, why);
  };
  std::set<std::uint32_t> senders;
  for (const auto& vc : m.viewchange_set) {
    if (vc.new_view != w) return invalid("view change for another view");
    senders.insert(vc.from.index);
  }
  if (senders.size() < quorums_.new_view || senders.size() != m.viewchange_set.size()) {
    return invalid("insufficient view changes");
  }
  auto plan = plan_new_view(m.viewchange_set);
  if (plan.entries != m.repropose_list) return invalid("re-proposal list does not match evidence");
  if (counter_kind() && (!m.counter_cert || m.counter_cert->k != plan.h)) {
    return invalid("counter certificate does not start at the stable sequence number");
  }
  install_view(m, plan.h, now, fx);
}

void Replica::install_view(const NewView& nv, Seq h, SimTime now, Effects& fx) {
  const View w = nv.new_view;
  view_ = w;
  vc_target_ = w;
  escalations_ = 0;
  live_timers_.clear();
  forward_timers_.clear();
  if (nv.counter_cert) primary_counter_[w] = nv.counter_cert->q;
  slots_.clear();
  reorder_.clear();
  seen_in_view_.clear();
  prebound_.reset();
  in_flight_.clear();
  vcs_.erase(vcs_.begin(), vcs_.upper_bound(w));

  Seq top = h;
  std::map<Seq, Digest> decided;
  for (const auto& e : nv.repropose_list) {
    top = std::max(top, e.seq);
    decided[e.seq] = e.digest;
  }
  const Seq base = std::max(h, stable_seq_);
  next_ordered_ = base + 1;
  next_commit_ = base + 1;
  next_seq_ = std::max(top, stable_seq_) + 1;
  if (opts_.cfg.primary_of(w) == id_) {
    for (const auto& e : nv.repropose_list) {
      if (e.seq > stable_seq_) in_flight_.insert(e.seq);
    }
  }

  // Executions the new view does not confirm are speculative leftovers.
  for (Seq s = std::max(h, stable_seq_) + 1; s <= watermark_; ++s) {
    auto it = decided.find(s);
    auto rec = exec_log_.find(s);
    if (it != decided.end() && rec != exec_log_.end() && rec->second.digest == it->second) continue;
    if (traits_.speculative) {
      undo_from(s, now, fx);
    } else {
      note(fx, now, TraceKind::Divergence, w, s, {}, 0, 0, "committed execution not re-proposed");
    }
    break;
  }
  note(fx, now, TraceKind::NewViewInstalled, w, 0, {}, h, nv.repropose_list.size());
  replay_future(now, fx);
  try_propose(now, fx);
}

void Replica::undo_from(Seq lowest, SimTime now, Effects& fx) {
  for (Seq s = watermark_; s >= lowest && s > stable_seq_; --s) {
    auto it = exec_log_.find(s);
    if (it == exec_log_.end() || !it->second.undo) {
      note(fx, now, TraceKind::Divergence, view_, s, {}, 0, 0, "no undo record");
      return;
    }
    auto& undo = *it->second.undo;
    for (auto u = undo.kv.rbegin(); u != undo.kv.rend(); ++u) {
      if (u->second) {
        kv_[u->first] = *u->second;
      } else {
        kv_.erase(u->first);
      }
    }
    if (undo.cache) {
      if (undo.cache->second) {
        reply_cache_[undo.cache->first] = *undo.cache->second;
      } else {
        reply_cache_.erase(undo.cache->first);
      }
    }
    note(fx, now, TraceKind::UndoApplied, it->second.view, s, it->second.digest,
         it->second.request.client.value, it->second.request.request_id);
    own_checkpoints_.erase(s);
    exec_log_.erase(it);
    watermark_ = s - 1;
  }
}

void Replica::replay_future(SimTime now, Effects& fx) {
  auto pending = std::move(future_);
  future_.clear();
  for (auto& msg : pending) {
    View v = std::visit(
        [](const auto& m) -> View {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Preprepare> || std::is_same_v<T, Prepare> ||
                        std::is_same_v<T, Commit>) {
            return m.view;
          } else {
            return 0;
          }
        },
        msg);
    if (v > view_) {
      future_.push_back(std::move(msg));
    } else if (v == view_) {
      dispatch(msg, now, fx);
    }
  }
}

}  // namespace trustlab
