#include "trustlab/verdict_io.hpp"

#include <iomanip>

namespace trustlab {

namespace {

const char* flag(bool b) { return b ? "true" : "false"; }

template <class T, class F>
std::string joined(const std::vector<T>& xs, F f) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += ',';
    out += f(x);
  }
  return out.empty() ? "-" : out;
}

nlohmann::json record(const nlohmann::json& tags, const char* type) {
  nlohmann::json j = tags.is_object() ? tags : nlohmann::json::object();
  j["record"] = type;
  return j;
}

}  // namespace

nlohmann::json to_json(const Violation& v) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(v.kind));
  j["seq"] = v.seq;
  j["view"] = v.view;
  j["replicas"] = v.replicas;
  j["digests"] = nlohmann::json::array();
  for (const auto& d : v.digests) j["digests"].push_back(d.hex());
  j["detail"] = v.detail;
  return j;
}

void write_verdict_text(const Verdict& v, std::ostream& os) {
  os << "verdict safety_ok=" << flag(v.safety_ok) << " persistence_ok=" << flag(v.persistence_ok)
     << " rsm_liveness_ok=" << flag(v.rsm_liveness_ok)
     << " consensus_liveness_ok=" << flag(v.consensus_liveness_ok)
     << " aborted=" << flag(v.aborted);
  if (v.aborted) os << " abort_reason=" << std::quoted(v.abort_reason);
  os << '\n';
  for (const auto& x : v.violations) {
    os << "violation kind=" << to_string(x.kind) << " seq=" << x.seq << " view=" << x.view
       << " replicas=" << joined(x.replicas, [](auto r) { return std::to_string(r); })
       << " digests=" << joined(x.digests, [](const Digest& d) { return d.short_hex(); })
       << " detail=" << std::quoted(x.detail) << '\n';
  }
  for (const auto& r : v.requests) {
    os << "request client=" << r.client.value << " id=" << r.request_id
       << " completed=" << flag(r.completed) << " committed=" << flag(r.committed_somewhere);
    if (r.completed) os << " latency_us=" << r.latency;
    if (!r.blocking_reason.empty()) os << " reason=" << std::quoted(r.blocking_reason);
    os << '\n';
  }
  const auto& s = v.stats;
  os << "stat tps=" << std::fixed << std::setprecision(1) << s.tps
     << " mean_latency_us=" << s.mean_latency_us << std::defaultfloat
     << " completed_txns=" << s.completed_txns << " makespan_us=" << s.makespan
     << " max_in_flight=" << s.max_in_flight << " undo=" << s.undo_count
     << " views_installed=" << s.views_installed << '\n';
  std::vector<std::string> calls;
  for (std::size_t i = 0; i < s.trusted_calls.size(); ++i) {
    calls.push_back(std::to_string(i) + ':' + std::to_string(s.trusted_calls[i]));
  }
  os << "stat trusted_calls=" << joined(calls, [](const std::string& x) { return x; }) << '\n';
}

void write_verdict_jsonl(const Verdict& v, std::ostream& os, const nlohmann::json& tags) {
  auto head = record(tags, "verdict");
  head["safety_ok"] = v.safety_ok;
  head["persistence_ok"] = v.persistence_ok;
  head["rsm_liveness_ok"] = v.rsm_liveness_ok;
  head["consensus_liveness_ok"] = v.consensus_liveness_ok;
  head["aborted"] = v.aborted;
  if (v.aborted) head["abort_reason"] = v.abort_reason;
  os << head.dump() << '\n';
  for (const auto& x : v.violations) {
    auto j = record(tags, "violation");
    j.update(to_json(x));
    os << j.dump() << '\n';
  }
  for (const auto& r : v.requests) {
    auto j = record(tags, "request");
    j["client"] = r.client.value;
    j["request_id"] = r.request_id;
    j["completed"] = r.completed;
    j["committed"] = r.committed_somewhere;
    if (r.completed) j["latency_us"] = r.latency;
    if (!r.blocking_reason.empty()) j["reason"] = r.blocking_reason;
    os << j.dump() << '\n';
  }
  auto stat = [&](const char* name, const nlohmann::json& value) {
    auto j = record(tags, "stat");
    j["name"] = name;
    j["value"] = value;
    os << j.dump() << '\n';
  };
  const auto& s = v.stats;
  stat("tps", s.tps);
  stat("mean_latency_us", s.mean_latency_us);
  stat("completed_txns", s.completed_txns);
  stat("makespan_us", s.makespan);
  stat("max_in_flight", s.max_in_flight);
  stat("undo", s.undo_count);
  stat("views_installed", s.views_installed);
  stat("trusted_calls", s.trusted_calls);
}

}  // namespace trustlab
