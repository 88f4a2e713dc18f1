#include "trustlab/codec.hpp"

#include <type_traits>

namespace trustlab {

void Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Writer::bytes(std::span<const std::uint8_t> b) {
  u32(static_cast<std::uint32_t>(b.size()));
  buf_.insert(buf_.end(), b.begin(), b.end());
}

void Writer::str(std::string_view s) {
  bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

void Writer::digest(const Digest& d) { buf_.insert(buf_.end(), d.bytes.begin(), d.bytes.end()); }

void Reader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) {
    throw DecodeError("truncated input at offset " + std::to_string(pos_));
  }
}

std::uint8_t Reader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
  return v;
}

bool Reader::boolean() {
  auto b = u8();
  if (b > 1) throw DecodeError("invalid boolean byte");
  return b == 1;
}

std::vector<std::uint8_t> Reader::bytes() {
  auto n = u32();
  need(n);
  std::vector<std::uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
  pos_ += n;
  return out;
}

std::string Reader::str() {
  auto b = bytes();
  return std::string(b.begin(), b.end());
}

Digest Reader::digest() {
  need(kDigestBytes);
  Digest d;
  std::copy_n(data_.begin() + pos_, kDigestBytes, d.bytes.begin());
  pos_ += kDigestBytes;
  return d;
}

std::uint32_t Reader::count(std::size_t min_element_bytes) {
  auto n = u32();
  if (min_element_bytes > 0 && n > (data_.size() - pos_) / min_element_bytes) {
    throw DecodeError("element count " + std::to_string(n) + " exceeds remaining input");
  }
  return n;
}

namespace {

template <class T, class F>
void encode_vec(Writer& w, const std::vector<T>& v, F&& each) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& e : v) each(e);
}

template <class T>
void encode_opt(Writer& w, const std::optional<T>& v) {
  w.boolean(v.has_value());
  if (v) encode(w, *v);
}

void encode_opt_digest(Writer& w, const std::optional<Digest>& d) {
  w.boolean(d.has_value());
  if (d) w.digest(*d);
}

void encode_principal(Writer& w, const Principal& p) {
  w.u8(static_cast<std::uint8_t>(p.kind));
  w.u32(p.id);
}

Principal decode_principal(Reader& r) {
  auto kind = r.u8();
  if (kind > 2) throw DecodeError("invalid principal kind");
  return Principal{static_cast<Principal::Kind>(kind), r.u32()};
}

void encode_prepare_like(Writer& w, View v, Seq s, ReplicaId from, const Digest& d,
                         const std::optional<Attestation>& att) {
  w.u64(v);
  w.u64(s);
  w.u32(from.index);
  w.digest(d);
  encode_opt(w, att);
}

void encode_cert(Writer& w, const CommitCert& c) {
  w.u64(c.seq);
  w.u64(c.view);
  w.digest(c.digest);
  encode_vec(w, c.prepares, [&](const Prepare& p) { encode(w, ProtocolMessage{p}); });
}

// Body encoders: everything except the outer authenticator.
void body(Writer& w, const Request& m) {
  w.u32(m.client.value);
  w.u64(m.request_id);
  encode(w, m.batch);
}
void body(Writer& w, const Preprepare& m) {
  w.u64(m.view);
  w.u64(m.seq);
  w.u32(m.from.index);
  encode(w, m.batch);
  w.digest(m.digest);
  encode_opt(w, m.attestation);
}
void body(Writer& w, const Prepare& m) {
  encode_prepare_like(w, m.view, m.seq, m.from, m.digest, m.attestation);
}
void body(Writer& w, const Commit& m) {
  encode_prepare_like(w, m.view, m.seq, m.from, m.digest, m.attestation);
}
void body(Writer& w, const Response& m) {
  w.u64(m.view);
  w.u64(m.seq);
  w.u32(m.txn.client.value);
  w.u64(m.txn.nonce);
  w.u64(m.request_id);
  w.boolean(m.result.has_value());
  if (m.result) w.u64(*m.result);
  w.u32(m.replica.index);
}
void body(Writer& w, const Checkpoint& m) {
  w.u64(m.seq);
  w.u32(m.from.index);
  w.digest(m.state_digest);
  encode_vec(w, m.proof.attestations, [&](const Attestation& a) { encode(w, a); });
  encode_vec(w, m.proof.certs, [&](const CommitCert& c) { encode_cert(w, c); });
  encode_vec(w, m.snapshot, [&](const auto& kv) {
    w.u64(kv.first);
    w.u64(kv.second);
  });
}
void body(Writer& w, const ViewChange& m) {
  w.u64(m.new_view);
  w.u32(m.from.index);
  w.u64(m.stable_seq);
  encode_vec(w, m.prepared_set, [&](const Preprepare& p) { encode(w, ProtocolMessage{p}); });
  encode_vec(w, m.committed_set, [&](const CommitCert& c) { encode_cert(w, c); });
}
void body(Writer& w, const NewView& m) {
  w.u64(m.new_view);
  w.u32(m.from.index);
  encode_vec(w, m.viewchange_set, [&](const ViewChange& v) { encode(w, ProtocolMessage{v}); });
  encode_vec(w, m.repropose_list, [&](const ReproposalEntry& e) {
    w.u64(e.seq);
    w.digest(e.digest);
    w.boolean(e.noop);
  });
  encode_opt(w, m.counter_cert);
}

template <class T>
T expect_variant(ProtocolMessage m) {
  if (!std::holds_alternative<T>(m)) throw DecodeError("unexpected nested message variant");
  return std::get<T>(std::move(m));
}

std::optional<Attestation> decode_opt_attestation(Reader& r) {
  if (!r.boolean()) return std::nullopt;
  return decode_attestation(r);
}

CommitCert decode_cert(Reader& r) {
  CommitCert c;
  c.seq = r.u64();
  c.view = r.u64();
  c.digest = r.digest();
  auto n = r.count(8);
  for (std::uint32_t i = 0; i < n; ++i) c.prepares.push_back(expect_variant<Prepare>(decode_message(r)));
  return c;
}

template <class T>
void decode_prepare_like(Reader& r, T& m) {
  m.view = r.u64();
  m.seq = r.u64();
  m.from = ReplicaId{r.u32()};
  m.digest = r.digest();
  m.attestation = decode_opt_attestation(r);
}

ProtocolMessage decode_body(Reader& r, std::uint8_t tag) {
  switch (static_cast<MessageKind>(tag)) {
    case MessageKind::Request: {
      Request m;
      m.client = ClientId{r.u32()};
      m.request_id = r.u64();
      m.batch = decode_batch(r);
      return m;
    }
    case MessageKind::Preprepare: {
      Preprepare m;
      m.view = r.u64();
      m.seq = r.u64();
      m.from = ReplicaId{r.u32()};
      m.batch = decode_batch(r);
      m.digest = r.digest();
      m.attestation = decode_opt_attestation(r);
      return m;
    }
    case MessageKind::Prepare: {
      Prepare m;
      decode_prepare_like(r, m);
      return m;
    }
    case MessageKind::Commit: {
      Commit m;
      decode_prepare_like(r, m);
      return m;
    }
    case MessageKind::Response: {
      Response m;
      m.view = r.u64();
      m.seq = r.u64();
      m.txn.client = ClientId{r.u32()};
      m.txn.nonce = r.u64();
      m.request_id = r.u64();
      if (r.boolean()) m.result = r.u64();
      m.replica = ReplicaId{r.u32()};
      return m;
    }
    case MessageKind::Checkpoint: {
      Checkpoint m;
      m.seq = r.u64();
      m.from = ReplicaId{r.u32()};
      m.state_digest = r.digest();
      auto na = r.count(8);
      for (std::uint32_t i = 0; i < na; ++i) m.proof.attestations.push_back(decode_attestation(r));
      auto nc = r.count(8);
      for (std::uint32_t i = 0; i < nc; ++i) m.proof.certs.push_back(decode_cert(r));
      auto ns = r.count(16);
      for (std::uint32_t i = 0; i < ns; ++i) {
        auto k = r.u64();
        auto v = r.u64();
        m.snapshot.emplace_back(k, v);
      }
      return m;
    }
    case MessageKind::ViewChange: {
      ViewChange m;
      m.new_view = r.u64();
      m.from = ReplicaId{r.u32()};
      m.stable_seq = r.u64();
      auto np = r.count(8);
      for (std::uint32_t i = 0; i < np; ++i)
        m.prepared_set.push_back(expect_variant<Preprepare>(decode_message(r)));
      auto nc = r.count(8);
      for (std::uint32_t i = 0; i < nc; ++i) m.committed_set.push_back(decode_cert(r));
      return m;
    }
    case MessageKind::NewView: {
      NewView m;
      m.new_view = r.u64();
      m.from = ReplicaId{r.u32()};
      auto nv = r.count(8);
      for (std::uint32_t i = 0; i < nv; ++i)
        m.viewchange_set.push_back(expect_variant<ViewChange>(decode_message(r)));
      auto ne = r.count(41);
      for (std::uint32_t i = 0; i < ne; ++i) {
        ReproposalEntry e;
        e.seq = r.u64();
        e.digest = r.digest();
        e.noop = r.boolean();
        m.repropose_list.push_back(e);
      }
      m.counter_cert = decode_opt_attestation(r);
      return m;
    }
  }
  throw DecodeError("unknown message tag " + std::to_string(tag));
}

}  // namespace

void encode(Writer& w, const Transaction& t) {
  w.u32(t.client.value);
  w.u64(t.nonce);
  w.u8(static_cast<std::uint8_t>(t.op.index()));
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Put>) {
          w.u64(op.key);
          w.u64(op.value);
        } else if constexpr (std::is_same_v<T, Get>) {
          w.u64(op.key);
        }
      },
      t.op);
}

void encode(Writer& w, const Batch& b) {
  encode_vec(w, b, [&](const Transaction& t) { encode(w, t); });
}

void encode(Writer& w, const Authenticator& a) {
  encode_principal(w, a.signer);
  w.digest(a.payload_digest);
  w.bytes(a.tag);
}

void encode(Writer& w, const Attestation& a) {
  w.u32(a.component);
  w.u8(static_cast<std::uint8_t>(a.kind));
  w.u64(a.q);
  w.u64(a.k);
  encode_opt_digest(w, a.x);
  encode(w, a.auth);
}

void encode(Writer& w, const ProtocolMessage& m) {
  w.u8(static_cast<std::uint8_t>(m.index()));
  std::visit([&](const auto& msg) { body(w, msg); }, m);
  encode(w, auth_of(m));
}

Transaction decode_transaction(Reader& r) {
  Transaction t;
  t.client = ClientId{r.u32()};
  t.nonce = r.u64();
  switch (r.u8()) {
    case 0: {
      Put p;
      p.key = r.u64();
      p.value = r.u64();
      t.op = p;
      break;
    }
    case 1: t.op = Get{r.u64()}; break;
    case 2: t.op = Noop{}; break;
    default: throw DecodeError("unknown operation tag");
  }
  return t;
}

Batch decode_batch(Reader& r) {
  Batch b;
  auto n = r.count(13);
  b.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) b.push_back(decode_transaction(r));
  return b;
}

Authenticator decode_authenticator(Reader& r) {
  Authenticator a;
  a.signer = decode_principal(r);
  a.payload_digest = r.digest();
  a.tag = r.bytes();
  return a;
}

Attestation decode_attestation(Reader& r) {
  Attestation a;
  a.component = r.u32();
  auto kind = r.u8();
  if (kind > 2) throw DecodeError("invalid attestation kind");
  a.kind = static_cast<AttestKind>(kind);
  a.q = r.u64();
  a.k = r.u64();
  if (r.boolean()) a.x = r.digest();
  a.auth = decode_authenticator(r);
  return a;
}

ProtocolMessage decode_message(Reader& r) {
  auto tag = r.u8();
  auto m = decode_body(r, tag);
  auth_of(m) = decode_authenticator(r);
  return m;
}

std::vector<std::uint8_t> encode(const ProtocolMessage& m) {
  Writer w;
  encode(w, m);
  return w.take();
}

ProtocolMessage decode_message(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto m = decode_message(r);
  if (!r.done()) throw DecodeError("trailing bytes after message");
  return m;
}

std::vector<std::uint8_t> encode_body(const ProtocolMessage& m) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(m.index()));
  std::visit([&](const auto& msg) { body(w, msg); }, m);
  return w.take();
}

std::vector<std::uint8_t> encode_attestation_body(const Attestation& a) {
  Writer w;
  w.u32(a.component);
  w.u8(static_cast<std::uint8_t>(a.kind));
  w.u64(a.q);
  w.u64(a.k);
  encode_opt_digest(w, a.x);
  return w.take();
}

Digest batch_digest(const Batch& b) {
  Writer w;
  encode(w, b);
  return digest_of(w.buffer());
}

Digest body_digest(const ProtocolMessage& m) { return digest_of(encode_body(m)); }

Digest attestation_body_digest(const Attestation& a) {
  return digest_of(encode_attestation_body(a));
}

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::Request: return "Request";
    case MessageKind::Preprepare: return "Preprepare";
    case MessageKind::Prepare: return "Prepare";
    case MessageKind::Commit: return "Commit";
    case MessageKind::Response: return "Response";
    case MessageKind::Checkpoint: return "Checkpoint";
    case MessageKind::ViewChange: return "ViewChange";
    case MessageKind::NewView: return "NewView";
  }
  return "?";
}

std::optional<MessageKind> parse_message_kind(std::string_view s) {
  for (std::uint8_t i = 0; i < 8; ++i) {
    auto k = static_cast<MessageKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

const Authenticator& auth_of(const ProtocolMessage& m) {
  return std::visit([](const auto& msg) -> const Authenticator& { return msg.auth; }, m);
}

Authenticator& auth_of(ProtocolMessage& m) {
  return std::visit([](auto& msg) -> Authenticator& { return msg.auth; }, m);
}

}  // namespace trustlab
