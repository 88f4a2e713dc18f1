#include "trustlab/trace.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "trustlab/codec.hpp"

namespace trustlab {

namespace {

constexpr std::array<std::string_view, 26> kKindNames{
    "Send",          "Deliver",          "Drop",           "Rejected",       "TcCall",
    "Proposed",      "PrimaryCommitted", "Committed",      "Executed",       "UndoApplied",
    "ViewChangeStarted", "NewViewInstalled", "InvalidNewView", "Reproposed", "ConflictingReports",
    "CheckpointStable", "StateAdopted",   "Divergence",     "ClientSubmit",   "ClientResponse",
    "ClientComplete", "ClientTimeout",   "ForgedSend",     "Rollback",       "Crash",
    "Abort",
};

constexpr std::string_view kMagic = "TLTRACE1";

void put_principal(Writer& w, const Principal& p) {
  w.u8(static_cast<std::uint8_t>(p.kind));
  w.u32(p.id);
}

Principal get_principal(Reader& r) {
  auto k = r.u8();
  if (k > 2) throw DecodeError("invalid principal kind in trace");
  return Principal{static_cast<Principal::Kind>(k), r.u32()};
}

}  // namespace

std::string_view to_string(TraceKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<TraceKind> parse_trace_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<TraceKind>(i);
  }
  return std::nullopt;
}

bool Trace::aborted() const {
  for (const auto& e : events) {
    if (e.kind == TraceKind::Abort) return true;
  }
  return false;
}

bool Trace::is_byzantine(ReplicaId r) const {
  for (auto b : header.byzantine) {
    if (b == r.index) return true;
  }
  return false;
}

std::vector<std::uint8_t> encode_trace(const Trace& t) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  const auto& h = t.header;
  w.str(h.scenario);
  w.u8(static_cast<std::uint8_t>(h.kind));
  w.u32(h.f);
  w.u32(h.n);
  w.u64(h.seed);
  w.i64(h.horizon);
  w.i64(h.gst);
  w.u32(static_cast<std::uint32_t>(h.byzantine.size()));
  for (auto b : h.byzantine) w.u32(b);
  w.u8(static_cast<std::uint8_t>(h.persistence));
  w.u32(h.clients);
  w.u32(h.batch_size);
  w.i64(h.access_latency);
  w.u8(static_cast<std::uint8_t>(h.level));
  w.u64(t.events.size());
  for (const auto& e : t.events) {
    w.i64(e.time);
    w.u8(static_cast<std::uint8_t>(e.kind));
    put_principal(w, e.actor);
    put_principal(w, e.peer);
    w.u64(e.view);
    w.u64(e.seq);
    w.digest(e.digest);
    w.u64(e.a);
    w.u64(e.b);
    w.str(e.text);
  }
  return w.take();
}

Trace decode_trace(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw DecodeError("not a trace file");
  }
  Trace t;
  auto& h = t.header;
  h.scenario = r.str();
  auto kind = r.u8();
  if (kind >= all_protocol_kinds().size()) throw DecodeError("invalid protocol kind in trace");
  h.kind = static_cast<ProtocolKind>(kind);
  h.f = r.u32();
  h.n = r.u32();
  h.seed = r.u64();
  h.horizon = r.i64();
  h.gst = r.i64();
  auto nb = r.count(4);
  for (std::uint32_t i = 0; i < nb; ++i) h.byzantine.push_back(r.u32());
  h.persistence = r.u8() == 0 ? Persistence::Persistent : Persistence::Volatile;
  h.clients = r.u32();
  h.batch_size = r.u32();
  h.access_latency = r.i64();
  h.level = r.u8() == 0 ? TraceLevel::Summary : TraceLevel::Full;
  auto ne = r.u64();
  for (std::uint64_t i = 0; i < ne; ++i) {
    TraceEvent e;
    e.time = r.i64();
    auto k = r.u8();
    if (k >= kKindNames.size()) throw DecodeError("invalid event kind in trace");
    e.kind = static_cast<TraceKind>(k);
    e.actor = get_principal(r);
    e.peer = get_principal(r);
    e.view = r.u64();
    e.seq = r.u64();
    e.digest = r.digest();
    e.a = r.u64();
    e.b = r.u64();
    e.text = r.str();
    t.events.push_back(std::move(e));
  }
  if (!r.done()) throw DecodeError("trailing bytes after trace");
  return t;
}

void write_trace(const Trace& t, const std::filesystem::path& p) {
  auto bytes = encode_trace(t);
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write trace " + p.string());
}

Trace read_trace(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace " + p.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  return decode_trace(bytes);
}

std::string render_event(const TraceEvent& e) {
  std::ostringstream os;
  os << e.time << "us " << to_string(e.kind) << " " << to_string(e.actor);
  switch (e.kind) {
    case TraceKind::Send:
    case TraceKind::Deliver:
    case TraceKind::Drop:
    case TraceKind::ForgedSend:
      os << " -> " << to_string(e.peer) << " "
         << to_string(static_cast<MessageKind>(e.a)) << " v=" << e.view << " seq=" << e.seq;
      break;
    case TraceKind::Rejected:
      os << " " << to_string(static_cast<MessageKind>(e.a)) << " from " << to_string(e.peer)
         << " v=" << e.view << " seq=" << e.seq;
      break;
    case TraceKind::TcCall:
      os << " component=" << e.b << " q=" << e.a << " k=" << e.seq;
      break;
    case TraceKind::ClientSubmit:
    case TraceKind::ClientTimeout:
      os << " request=" << e.a;
      break;
    case TraceKind::ClientComplete:
      os << " request=" << e.a << " v=" << e.view << " seq=" << e.seq << " latency=" << e.b << "us";
      break;
    case TraceKind::NewViewInstalled:
      os << " v=" << e.view << " stable=" << e.a << " entries=" << e.b;
      break;
    default:
      os << " v=" << e.view << " seq=" << e.seq;
      break;
  }
  if (!e.digest.is_zero()) os << " d=" << e.digest.short_hex();
  if (!e.text.empty()) os << " " << e.text;
  return os.str();
}

void render_trace(const Trace& t, std::ostream& os,
                  const std::function<bool(const TraceEvent&)>& keep) {
  const auto& h = t.header;
  os << "# scenario=" << h.scenario << " protocol=" << to_string(h.kind) << " f=" << h.f
     << " n=" << h.n << " seed=" << h.seed << " horizon=" << h.horizon << "us gst=" << h.gst
     << "us persistence=" << to_string(h.persistence) << " clients=" << h.clients
     << " batch=" << h.batch_size << " access_latency=" << h.access_latency << "us byzantine=[";
  for (std::size_t i = 0; i < h.byzantine.size(); ++i) os << (i ? "," : "") << h.byzantine[i];
  os << "] events=" << t.events.size() << "\n";
  for (const auto& e : t.events) {
    if (!keep || keep(e)) os << render_event(e) << "\n";
  }
}

}  // namespace trustlab
