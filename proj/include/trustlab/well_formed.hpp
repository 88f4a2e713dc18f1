#pragma once

#include <string_view>

#include "trustlab/auth.hpp"
#include "trustlab/messages.hpp"
#include "trustlab/protocol_kind.hpp"

namespace trustlab {

enum class Malformed : std::uint8_t {
  None,
  BadSignature,
  UnknownSigner,
  AttestationMismatch,
  AttestationInvalid,
  MissingAttestation,
  UnexpectedAttestation,
  DigestMismatch,
  BadField,
};

std::string_view to_string(Malformed m);

struct VerificationContext {
  const KeyRing& keys;
  ProtocolKind kind;
  SystemConfig cfg;
};

struct WellFormedness {
  bool ok = true;
  Malformed reason = Malformed::None;
  explicit operator bool() const { return ok; }
};

/// Signature, field and attestation checks that need no replica state. Nested messages
/// (certificates, view-change evidence) are checked recursively.
WellFormedness is_well_formed(const ProtocolMessage& msg, const VerificationContext& ctx);

}  // namespace trustlab
