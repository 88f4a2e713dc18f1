#include "trustlab/trusted.hpp"

#include <algorithm>

#include "trustlab/codec.hpp"

namespace trustlab {

std::string_view to_string(Persistence p) {
  return p == Persistence::Persistent ? "Persistent" : "Volatile";
}

std::optional<Persistence> parse_persistence(std::string_view s) {
  if (s == "Persistent" || s == "persistent") return Persistence::Persistent;
  if (s == "Volatile" || s == "volatile") return Persistence::Volatile;
  return std::nullopt;
}

std::string_view to_string(TcOp op) {
  switch (op) {
    case TcOp::AppendF: return "AppendF";
    case TcOp::Create: return "Create";
    case TcOp::LogAppend: return "LogAppend";
    case TcOp::Rollback: return "Rollback";
  }
  return "?";
}

TrustedComponent::TrustedComponent(ComponentId id, Persistence persistence, SimTime access_latency,
                                   std::uint32_t lanes, const KeyRing& keys)
    : id_(id),
      persistence_(persistence),
      latency_(access_latency),
      lane_free_(std::max<std::uint32_t>(lanes, 1), 0),
      keys_(keys) {}

SimTime TrustedComponent::charge(SimTime now) {
  ++calls_;
  auto lane = std::min_element(lane_free_.begin(), lane_free_.end());
  SimTime done = std::max(now, *lane) + latency_;
  *lane = done;
  return done;
}

Attestation TrustedComponent::attest(AttestKind kind, std::uint64_t q, std::uint64_t k,
                                     std::optional<Digest> x) const {
  Attestation a;
  a.component = id_;
  a.kind = kind;
  a.q = q;
  a.k = k;
  a.x = x;
  a.auth = keys_.sign(Principal::trusted(id_), attestation_body_digest(a));
  return a;
}

void TrustedComponent::notify(TcOp op, const Attestation& a, SimTime at) const {
  if (observer_) observer_(op, a, at);
}

TcCall TrustedComponent::append_f(std::uint64_t q, const Digest& x, SimTime now) {
  auto it = state_.counters.find(q);
  if (it == state_.counters.end()) {
    throw TrustedError(TrustedError::Code::UnknownCounter,
                       "unknown counter " + std::to_string(q));
  }
  auto k = ++it->second;
  TcCall r{q, k, attest(AttestKind::CounterBind, q, k, x), charge(now)};
  notify(TcOp::AppendF, r.att, now);
  return r;
}

TcCall TrustedComponent::create(std::uint64_t k0, SimTime now) {
  auto q = state_.next_counter_id++;
  state_.counters[q] = k0;
  TcCall r{q, k0, attest(AttestKind::CounterCreate, q, k0, std::nullopt), charge(now)};
  notify(TcOp::Create, r.att, now);
  return r;
}

TcCall TrustedComponent::log_append(std::uint64_t q, std::optional<std::uint64_t> k_new,
                                    const Digest& x, SimTime now) {
  auto it = state_.logs.find(q);
  if (it == state_.logs.end()) {
    throw TrustedError(TrustedError::Code::UnknownCounter, "unknown log " + std::to_string(q));
  }
  auto& log = it->second;
  std::uint64_t slot = k_new.value_or(log.last + 1);
  if (slot <= log.last) {
    throw TrustedError(TrustedError::Code::StaleSlot,
                       "slot " + std::to_string(slot) + " not above last " +
                           std::to_string(log.last) + " in log " + std::to_string(q));
  }
  log.last = slot;
  log.slots[slot] = x;
  TcCall r{q, slot, attest(AttestKind::LogAttest, q, slot, x), charge(now)};
  notify(TcOp::LogAppend, r.att, now);
  return r;
}

std::optional<Attestation> TrustedComponent::log_lookup(std::uint64_t q, std::uint64_t k) const {
  auto it = state_.logs.find(q);
  if (it == state_.logs.end()) return std::nullopt;
  auto s = it->second.slots.find(k);
  if (s == it->second.slots.end()) return std::nullopt;
  return attest(AttestKind::LogAttest, q, k, s->second);
}

void TrustedComponent::open_log(std::uint64_t q) { state_.logs.try_emplace(q); }

std::optional<std::uint64_t> TrustedComponent::counter_value(std::uint64_t q) const {
  auto it = state_.counters.find(q);
  if (it == state_.counters.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint64_t> TrustedComponent::log_last(std::uint64_t q) const {
  auto it = state_.logs.find(q);
  if (it == state_.logs.end()) return std::nullopt;
  return it->second.last;
}

void TrustedComponent::adversary_rollback(const TcSnapshot& to, SimTime now) {
  if (persistence_ == Persistence::Persistent) {
    throw TrustedError(TrustedError::Code::RollbackForbidden,
                       "component " + std::to_string(id_) + " is persistent");
  }
  state_ = to;
  notify(TcOp::Rollback, Attestation{id_, AttestKind::CounterBind, 0, 0, std::nullopt, {}}, now);
}

bool verify_attestation(const Attestation& att, const KeyRing& keys) {
  if (!keys.is_registered(att.component)) return false;
  if (att.auth.signer != Principal::trusted(att.component)) return false;
  if ((att.kind == AttestKind::CounterCreate) == att.x.has_value()) return false;
  return keys.verify(att.auth, attestation_body_digest(att));
}

}  // namespace trustlab

namespace trustlab {

Digest TrustedComponent::fingerprint() const {
  Writer w;
  w.u64(state_.next_counter_id);
  w.u32(static_cast<std::uint32_t>(state_.counters.size()));
  for (const auto& [q, k] : state_.counters) {
    w.u64(q);
    w.u64(k);
  }
  w.u32(static_cast<std::uint32_t>(state_.logs.size()));
  for (const auto& [q, log] : state_.logs) {
    w.u64(q);
    w.u64(log.last);
    w.u32(static_cast<std::uint32_t>(log.slots.size()));
    for (const auto& [k, x] : log.slots) {
      w.u64(k);
      w.digest(x);
    }
  }
  for (auto t : lane_free_) w.i64(t);
  return digest_of(w.buffer());
}

}  // namespace trustlab
