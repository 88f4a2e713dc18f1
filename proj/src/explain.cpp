#include "trustlab/explain.hpp"

#include <charconv>
#include <map>

namespace trustlab {

namespace {

bool is_message_event(TraceKind k) {
  return k == TraceKind::Send || k == TraceKind::Deliver || k == TraceKind::Drop ||
         k == TraceKind::ForgedSend;
}

template <class T>
T number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw FilterError("filter " + key + " expects a number, got '" + v + "'");
  }
  return out;
}

}  // namespace

bool TraceFilter::keep(const TraceEvent& e) const {
  if (seq && e.seq != *seq) return false;
  if (replica) {
    auto is = [&](const Principal& p) {
      return p.kind == Principal::Kind::Replica && p.id == *replica;
    };
    if (!is(e.actor) && !is(e.peer)) return false;
  }
  if (message && (!is_message_event(e.kind) || static_cast<MessageKind>(e.a) != *message)) {
    return false;
  }
  if (event && e.kind != *event) return false;
  return true;
}

TraceFilter parse_trace_filter(const std::vector<std::string>& terms) {
  TraceFilter f;
  for (const auto& t : terms) {
    auto eq = t.find('=');
    if (eq == std::string::npos) throw FilterError("filter '" + t + "' is not key=value");
    auto key = t.substr(0, eq);
    auto value = t.substr(eq + 1);
    if (key == "seq") {
      f.seq = number<Seq>(key, value);
    } else if (key == "replica") {
      f.replica = number<std::uint32_t>(key, value);
    } else if (key == "kind") {
      if (auto m = parse_message_kind(value)) {
        f.message = *m;
      } else if (auto k = parse_trace_kind(value)) {
        f.event = *k;
      } else {
        throw FilterError("unknown kind '" + value + "'");
      }
    } else {
      throw FilterError("unknown filter key '" + key + "'");
    }
  }
  return f;
}

void explain_trace(const Trace& t, const TraceFilter& filter, std::ostream& os) {
  render_trace(t, os, [](const TraceEvent&) { return false; });
  std::map<std::uint32_t, std::vector<const TraceEvent*>> by_replica;
  std::vector<const TraceEvent*> others;
  for (const auto& e : t.events) {
    if (!filter.keep(e)) continue;
    if (e.actor.kind == Principal::Kind::Replica) {
      by_replica[e.actor.id].push_back(&e);
    } else {
      others.push_back(&e);
    }
  }
  for (const auto& [r, events] : by_replica) {
    os << "== replica " << r << (t.is_byzantine(ReplicaId{r}) ? " (byzantine)" : "") << '\n';
    for (const auto* e : events) os << "  " << render_event(*e) << '\n';
  }
  if (!others.empty()) {
    os << "== clients\n";
    for (const auto* e : others) os << "  " << render_event(*e) << '\n';
  }
}

}  // namespace trustlab
