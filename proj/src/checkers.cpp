#include "trustlab/checkers.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace trustlab {

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::Agreement: return "Agreement";
    case ViolationKind::Persistence: return "Persistence";
    case ViolationKind::Divergence: return "Divergence";
    case ViolationKind::ConflictingReports: return "ConflictingReports";
    case ViolationKind::Authenticity: return "Authenticity";
    case ViolationKind::AttestationReuse: return "AttestationReuse";
  }
  return "?";
}

namespace {

bool honest(const Trace& t, const Principal& p) {
  return p.kind == Principal::Kind::Replica && !t.is_byzantine(ReplicaId{p.id});
}

std::uint32_t client_quorum(const Trace& t) {
  SystemConfig cfg;
  cfg.f = t.header.f;
  cfg.n = t.header.n;
  return quorums(t.header.kind, cfg).client;
}

using ReqKey = std::pair<std::uint32_t, std::uint64_t>;

}  // namespace

std::vector<Violation> check_agreement(const Trace& t) {
  std::vector<Violation> out;
  // seq -> digest -> replicas that executed it
  std::map<Seq, std::map<Digest, std::set<std::uint32_t>>> executed;
  std::map<Seq, View> first_view;

  if (!traits(t.header.kind).speculative) {
    for (const auto& e : t.events) {
      if (e.kind != TraceKind::Executed || !honest(t, e.actor)) continue;
      executed[e.seq][e.digest].insert(e.actor.id);
      first_view.try_emplace(e.seq, e.view);
    }
  } else {
    // Committed executions: a client quorum of replicas executed the same batch in one view.
    std::map<std::tuple<Seq, View, Digest>, std::set<std::uint32_t>> per_view;
    for (const auto& e : t.events) {
      if (e.kind == TraceKind::Executed) per_view[{e.seq, e.view, e.digest}].insert(e.actor.id);
    }
    const auto q = client_quorum(t);
    for (const auto& [key, who] : per_view) {
      if (who.size() < q) continue;
      auto [s, v, d] = key;
      bool any_honest = false;
      for (auto r : who) any_honest |= !t.is_byzantine(ReplicaId{r});
      if (!any_honest) continue;
      auto& slot = executed[s][d];
      for (auto r : who) {
        if (!t.is_byzantine(ReplicaId{r})) slot.insert(r);
      }
      first_view.try_emplace(s, v);
    }
  }
  for (const auto& [s, by_digest] : executed) {
    if (by_digest.size() < 2) continue;
    Violation v;
    v.kind = ViolationKind::Agreement;
    v.seq = s;
    v.view = first_view[s];
    for (const auto& [d, who] : by_digest) {
      v.digests.push_back(d);
      v.replicas.insert(v.replicas.end(), who.begin(), who.end());
    }
    v.detail = std::to_string(by_digest.size()) + " batches executed at one sequence number";
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Violation> check_persistence(const Trace& t) {
  std::vector<Violation> out;
  struct Done {
    SimTime at;
    Seq seq;
    Digest digest;
  };
  std::vector<Done> completions;
  std::map<View, SimTime> installed_at;
  std::map<View, Seq> stable_at;
  std::map<View, std::map<Seq, Digest>> lists;
  for (const auto& e : t.events) {
    switch (e.kind) {
      case TraceKind::ClientComplete:
        completions.push_back({e.time, e.seq, e.digest});
        break;
      case TraceKind::NewViewInstalled:
        if (honest(t, e.actor) && !installed_at.count(e.view)) {
          installed_at[e.view] = e.time;
          stable_at[e.view] = e.a;
        }
        break;
      case TraceKind::Reproposed:
        if (honest(t, e.actor)) lists[e.view][e.seq] = e.digest;
        break;
      default:
        break;
    }
  }
  for (const auto& [w, at] : installed_at) {
    const auto& list = lists[w];
    for (const auto& c : completions) {
      if (c.at >= at || c.seq <= stable_at[w]) continue;
      auto it = list.find(c.seq);
      if (it != list.end() && it->second == c.digest) continue;
      Violation v;
      v.kind = ViolationKind::Persistence;
      v.seq = c.seq;
      v.view = w;
      v.digests.push_back(c.digest);
      if (it != list.end()) v.digests.push_back(it->second);
      v.detail = it == list.end() ? "completed batch missing from re-proposals"
                                  : "completed batch re-proposed with another digest";
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Violation> check_authenticity(const Trace& t) {
  std::vector<Violation> out;
  if (t.header.level != TraceLevel::Full) return out;
  auto pack = [](const Principal& p) {
    return (static_cast<std::uint64_t>(p.kind) << 32) | p.id;
  };
  std::set<std::pair<std::uint64_t, Digest>> sent;
  for (const auto& e : t.events) {
    if ((e.kind == TraceKind::Send && pack(e.actor) == e.b) || e.kind == TraceKind::ForgedSend) {
      sent.insert({e.b, e.digest});
    } else if (e.kind == TraceKind::Deliver) {
      Principal signer{static_cast<Principal::Kind>(e.b >> 32),
                       static_cast<std::uint32_t>(e.b & 0xffffffffu)};
      if (signer.kind == Principal::Kind::Replica && t.is_byzantine(ReplicaId{signer.id})) continue;
      if (sent.count({e.b, e.digest})) continue;
      Violation v;
      v.kind = ViolationKind::Authenticity;
      v.seq = e.seq;
      v.view = e.view;
      v.digests.push_back(e.digest);
      v.detail = "delivered message never sent by " + to_string(signer);
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Violation> check_attestation_registry(const Trace& t) {
  std::vector<Violation> out;
  std::map<std::tuple<std::uint64_t, View, std::uint64_t, Seq>, Digest> seen;
  std::set<std::uint32_t> rolled_back;
  for (const auto& e : t.events) {
    if (e.kind == TraceKind::Rollback) rolled_back.insert(e.actor.id);
    if (e.kind != TraceKind::TcCall || e.text == "Rollback") continue;
    auto key = std::make_tuple(e.b, e.view, e.a, e.seq);
    auto [it, fresh] = seen.try_emplace(key, e.digest);
    if (fresh) continue;
    const bool allowed =
        t.header.persistence == Persistence::Volatile && rolled_back.count(e.actor.id) > 0;
    if (allowed) continue;
    Violation v;
    v.kind = ViolationKind::AttestationReuse;
    v.seq = e.seq;
    v.replicas.push_back(e.actor.id);
    v.digests = {it->second, e.digest};
    v.detail = "component " + std::to_string(e.b) + " re-issued q=" + std::to_string(e.a) +
               " k=" + std::to_string(e.seq);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<RequestLiveness> check_rsm_liveness(const Trace& t, SimTime horizon) {
  std::map<ReqKey, RequestLiveness> reqs;
  std::vector<ReqKey> order;
  std::map<ReqKey, SimTime> submitted;
  std::set<ReqKey> executed;
  View started = 0;
  View installed = 0;
  std::map<View, std::set<std::uint32_t>> complainants;
  for (const auto& e : t.events) {
    switch (e.kind) {
      case TraceKind::ClientSubmit: {
        ReqKey k{e.actor.id, e.a};
        if (reqs.try_emplace(k).second) {
          order.push_back(k);
          reqs[k].client = ClientId{e.actor.id};
          reqs[k].request_id = e.a;
          submitted[k] = e.time;
        }
        break;
      }
      case TraceKind::ClientComplete: {
        auto it = reqs.find({e.actor.id, e.a});
        if (it != reqs.end() && e.time <= horizon && !it->second.completed) {
          it->second.completed = true;
          it->second.latency = static_cast<SimTime>(e.b);
        }
        break;
      }
      case TraceKind::Executed:
        if (honest(t, e.actor)) executed.insert({static_cast<std::uint32_t>(e.a), e.b});
        break;
      case TraceKind::ViewChangeStarted:
        if (honest(t, e.actor)) {
          started = std::max(started, e.view);
          complainants[e.view].insert(e.actor.id);
        }
        break;
      case TraceKind::NewViewInstalled:
        if (honest(t, e.actor)) installed = std::max(installed, e.view);
        break;
      default:
        break;
    }
  }
  std::vector<RequestLiveness> out;
  for (const auto& k : order) {
    auto r = reqs[k];
    r.committed_somewhere = executed.count(k) > 0;
    if (!r.completed) {
      const auto k = complainants[started].size();
      if (started <= installed) {
        r.blocking_reason = "insufficient matching responses";
      } else if (k <= t.header.f) {
        r.blocking_reason = "insufficient matching responses; view change stalled with " +
                            std::to_string(k) + " honest complainant(s)";
      } else {
        r.blocking_reason = "pending view change";
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

Stats measure(const Trace& t) {
  Stats s;
  s.trusted_calls.assign(t.header.n, 0);
  s.proposed.assign(t.header.n, 0);
  std::map<ReqKey, std::uint64_t> sizes;
  double latency_sum = 0;
  std::map<std::pair<std::uint32_t, View>, std::set<Seq>> open;
  std::set<View> views;
  for (const auto& e : t.events) {
    switch (e.kind) {
      case TraceKind::ClientSubmit:
        sizes[{e.actor.id, e.a}] = e.b;
        ++s.submitted_requests;
        break;
      case TraceKind::ClientComplete:
        ++s.completed_requests;
        s.completed_txns += sizes[{e.actor.id, e.a}];
        latency_sum += static_cast<double>(e.b);
        s.makespan = std::max(s.makespan, e.time);
        break;
      case TraceKind::TcCall:
        if (e.text != "Rollback" && e.actor.id < t.header.n) ++s.trusted_calls[e.actor.id];
        break;
      case TraceKind::Proposed: {
        if (e.actor.id < t.header.n) ++s.proposed[e.actor.id];
        auto& set = open[{e.actor.id, e.view}];
        set.insert(e.seq);
        s.max_in_flight = std::max<std::uint64_t>(s.max_in_flight, set.size());
        break;
      }
      case TraceKind::Reproposed:
        if (e.actor.id < t.header.n) ++s.proposed[e.actor.id];
        break;
      case TraceKind::PrimaryCommitted:
        open[{e.actor.id, e.view}].erase(e.seq);
        break;
      case TraceKind::UndoApplied:
        ++s.undo_count;
        break;
      case TraceKind::NewViewInstalled:
        views.insert(e.view);
        break;
      default:
        break;
    }
  }
  s.views_installed = views.size();
  if (s.makespan > 0) s.tps = static_cast<double>(s.completed_txns) * 1e6 / s.makespan;
  if (s.completed_requests > 0) s.mean_latency_us = latency_sum / s.completed_requests;
  return s;
}

Verdict compute_verdict(const Trace& t) {
  Verdict v;
  for (const auto& e : t.events) {
    if (e.kind == TraceKind::Abort) {
      v.aborted = true;
      v.abort_reason = e.text;
    } else if (e.kind == TraceKind::Divergence && honest(t, e.actor)) {
      v.violations.push_back({ViolationKind::Divergence, e.seq, e.view, {e.actor.id}, {e.digest}, e.text});
    } else if (e.kind == TraceKind::ConflictingReports && honest(t, e.actor)) {
      v.violations.push_back(
          {ViolationKind::ConflictingReports, e.seq, e.view, {e.actor.id}, {}, e.text});
    }
  }
  auto agreement = check_agreement(t);
  v.safety_ok = agreement.empty();
  auto persistence = check_persistence(t);
  v.persistence_ok = persistence.empty();
  for (auto* group : {&agreement, &persistence}) {
    v.violations.insert(v.violations.end(), group->begin(), group->end());
  }
  for (auto&& extra : {check_authenticity(t), check_attestation_registry(t)}) {
    v.violations.insert(v.violations.end(), extra.begin(), extra.end());
  }
  v.requests = check_rsm_liveness(t, t.header.horizon);
  for (const auto& r : v.requests) {
    v.rsm_liveness_ok &= r.completed;
    v.consensus_liveness_ok &= r.committed_somewhere;
  }
  v.stats = measure(t);
  return v;
}

}  // namespace trustlab
