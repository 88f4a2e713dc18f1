#include "trustlab/well_formed.hpp"

#include "trustlab/codec.hpp"
#include "trustlab/trusted.hpp"

namespace trustlab {

std::string_view to_string(Malformed m) {
  switch (m) {
    case Malformed::None: return "None";
    case Malformed::BadSignature: return "BadSignature";
    case Malformed::UnknownSigner: return "UnknownSigner";
    case Malformed::AttestationMismatch: return "AttestationMismatch";
    case Malformed::AttestationInvalid: return "AttestationInvalid";
    case Malformed::MissingAttestation: return "MissingAttestation";
    case Malformed::UnexpectedAttestation: return "UnexpectedAttestation";
    case Malformed::DigestMismatch: return "DigestMismatch";
    case Malformed::BadField: return "BadField";
  }
  return "?";
}

namespace {

constexpr WellFormedness kOk{};

WellFormedness fail(Malformed m) { return {false, m}; }

struct AttestRule {
  AttestKind kind;
  ReplicaId owner;
  std::optional<std::uint64_t> q;
  std::optional<std::uint64_t> k;
  const Digest& x;
};

WellFormedness no_attestation(const std::optional<Attestation>& att) {
  return att ? fail(Malformed::UnexpectedAttestation) : kOk;
}

WellFormedness check_attestation(const std::optional<Attestation>& att, bool required,
                                 const AttestRule& rule, const VerificationContext& ctx) {
  if (!required) return no_attestation(att);
  if (!att) return fail(Malformed::MissingAttestation);
  if (!verify_attestation(*att, ctx.keys)) return fail(Malformed::AttestationInvalid);
  auto owner = ctx.keys.owner_of(att->component);
  if (!owner || *owner != rule.owner || att->kind != rule.kind) {
    return fail(Malformed::AttestationInvalid);
  }
  if ((rule.q && att->q != *rule.q) || (rule.k && att->k != *rule.k)) {
    return fail(Malformed::AttestationInvalid);
  }
  if (att->x != rule.x) return fail(Malformed::AttestationMismatch);
  return kOk;
}

WellFormedness check_signer(const ProtocolMessage& m, Principal expected,
                            const VerificationContext& ctx) {
  const auto& a = auth_of(m);
  if (a.signer.kind == Principal::Kind::Replica && a.signer.id >= ctx.cfg.n) {
    return fail(Malformed::UnknownSigner);
  }
  if (expected.kind == Principal::Kind::Replica && expected.id >= ctx.cfg.n) {
    return fail(Malformed::UnknownSigner);
  }
  if (a.signer != expected) return fail(Malformed::BadField);
  if (!verify_message(m, ctx.keys)) return fail(Malformed::BadSignature);
  return kOk;
}

class Checker {
 public:
  explicit Checker(const VerificationContext& ctx) : ctx_(ctx), t_(traits(ctx.kind)) {}

  WellFormedness operator()(const Request& m) const {
    if (m.batch.empty()) return fail(Malformed::BadField);
    for (const auto& t : m.batch) {
      if (t.client != m.client) return fail(Malformed::BadField);
    }
    if (m.batch.front().nonce != m.request_id) return fail(Malformed::BadField);
    return kOk;
  }

  WellFormedness operator()(const Preprepare& m) const {
    if (m.seq == 0 || m.batch.empty()) return fail(Malformed::BadField);
    if (m.from != ctx_.cfg.primary_of(m.view)) return fail(Malformed::BadField);
    if (batch_digest(m.batch) != m.digest) return fail(Malformed::DigestMismatch);
    switch (t_.attest) {
      case AttestStyle::None:
        return no_attestation(m.attestation);
      case AttestStyle::Log:
        return check_attestation(
            m.attestation, true,
            {AttestKind::LogAttest, m.from, log_id(m.view, LogPhase::Preprepare), m.seq, m.digest},
            ctx_);
      case AttestStyle::Counter:
      case AttestStyle::PrimaryOnly:
        return check_attestation(
            m.attestation, true, {AttestKind::CounterBind, m.from, std::nullopt, m.seq, m.digest},
            ctx_);
    }
    return kOk;
  }

  WellFormedness operator()(const Prepare& m) const {
    if (m.seq == 0) return fail(Malformed::BadField);
    if (t_.speculative) return fail(Malformed::BadField);
    switch (t_.attest) {
      case AttestStyle::None:
        return no_attestation(m.attestation);
      case AttestStyle::Log:
        return check_attestation(
            m.attestation, true,
            {AttestKind::LogAttest, m.from, log_id(m.view, LogPhase::Prepare), m.seq, m.digest},
            ctx_);
      case AttestStyle::Counter:
        return check_attestation(
            m.attestation, true,
            {AttestKind::CounterBind, m.from, std::nullopt, std::nullopt, m.digest}, ctx_);
      case AttestStyle::PrimaryOnly:
        return check_attestation(m.attestation, true,
                                 {AttestKind::CounterBind, ctx_.cfg.primary_of(m.view),
                                  std::nullopt, m.seq, m.digest},
                                 ctx_);
    }
    return kOk;
  }

  WellFormedness operator()(const Commit& m) const {
    if (m.seq == 0) return fail(Malformed::BadField);
    if (t_.attest == AttestStyle::Log) {
      return check_attestation(
          m.attestation, true,
          {AttestKind::LogAttest, m.from, log_id(m.view, LogPhase::Commit), m.seq, m.digest}, ctx_);
    }
    if (!t_.commit_phase && !t_.speculative) return fail(Malformed::BadField);
    return no_attestation(m.attestation);
  }

  WellFormedness operator()(const Response& m) const {
    if (m.seq == 0) return fail(Malformed::BadField);
    return kOk;
  }

  WellFormedness operator()(const Checkpoint& m) const {
    for (const auto& a : m.proof.attestations) {
      if (!verify_attestation(a, ctx_.keys)) return fail(Malformed::AttestationInvalid);
    }
    for (const auto& c : m.proof.certs) {
      if (auto r = cert(c); !r) return r;
    }
    return kOk;
  }

  WellFormedness operator()(const ViewChange& m) const {
    if (m.new_view == 0) return fail(Malformed::BadField);
    for (const auto& p : m.prepared_set) {
      if (p.seq <= m.stable_seq || p.view >= m.new_view) return fail(Malformed::BadField);
      if (auto r = is_well_formed(ProtocolMessage{p}, ctx_); !r) return r;
    }
    for (const auto& c : m.committed_set) {
      if (c.seq <= m.stable_seq || c.view >= m.new_view) return fail(Malformed::BadField);
      if (auto r = cert(c); !r) return r;
    }
    return kOk;
  }

  WellFormedness operator()(const NewView& m) const {
    if (m.from != ctx_.cfg.primary_of(m.new_view)) return fail(Malformed::BadField);
    for (const auto& vc : m.viewchange_set) {
      if (vc.new_view != m.new_view) return fail(Malformed::BadField);
      if (auto r = is_well_formed(ProtocolMessage{vc}, ctx_); !r) return r;
    }
    const bool counters =
        t_.attest == AttestStyle::Counter || t_.attest == AttestStyle::PrimaryOnly;
    if (!counters) {
      return m.counter_cert ? fail(Malformed::UnexpectedAttestation) : kOk;
    }
    if (!m.counter_cert) return fail(Malformed::MissingAttestation);
    const auto& cc = *m.counter_cert;
    if (!verify_attestation(cc, ctx_.keys) || cc.kind != AttestKind::CounterCreate ||
        ctx_.keys.owner_of(cc.component) != m.from) {
      return fail(Malformed::AttestationInvalid);
    }
    return kOk;
  }

 private:
  WellFormedness cert(const CommitCert& c) const {
    for (const auto& p : c.prepares) {
      if (p.seq != c.seq || p.view != c.view || p.digest != c.digest) {
        return fail(Malformed::BadField);
      }
      if (auto r = is_well_formed(ProtocolMessage{p}, ctx_); !r) return r;
    }
    return kOk;
  }

  const VerificationContext& ctx_;
  const ProtocolTraits& t_;
};

Principal expected_signer(const ProtocolMessage& m) {
  return std::visit(
      [](const auto& msg) -> Principal {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Request>) {
          return Principal::client(msg.client);
        } else if constexpr (std::is_same_v<T, Response>) {
          return Principal::replica(msg.replica);
        } else {
          return Principal::replica(msg.from);
        }
      },
      m);
}

}  // namespace

WellFormedness is_well_formed(const ProtocolMessage& msg, const VerificationContext& ctx) {
  if (auto r = check_signer(msg, expected_signer(msg), ctx); !r) return r;
  return std::visit(Checker(ctx), msg);
}

}  // namespace trustlab
