#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>

#include "trustlab/messages.hpp"

namespace trustlab {

enum class AuthMode : std::uint8_t { Simulated, Ed25519 };

/// Per-run signing and verification keys for every principal.
///
/// Simulated mode tags are keyed hashes over a per-principal secret derived from the
/// run seed. Ed25519 mode produces real signatures. Both sit behind Authenticator.
class KeyRing {
 public:
  explicit KeyRing(std::uint64_t seed, AuthMode mode = AuthMode::Simulated);
  ~KeyRing();
  KeyRing(const KeyRing&) = delete;
  KeyRing& operator=(const KeyRing&) = delete;

  AuthMode mode() const { return mode_; }

  Authenticator sign(Principal signer, const Digest& payload) const;
  bool verify(const Authenticator& a, const Digest& payload) const;

  /// Trusted components must be registered before their attestations verify.
  void register_component(ComponentId c, ReplicaId owner);
  bool is_registered(ComponentId c) const { return owners_.count(c) > 0; }
  std::optional<ReplicaId> owner_of(ComponentId c) const;

 private:
  struct Ed25519Keys;
  std::array<std::uint8_t, 32> secret(Principal p) const;

  std::uint64_t seed_;
  AuthMode mode_;
  std::map<ComponentId, ReplicaId> owners_;
  std::unique_ptr<Ed25519Keys> ed_;
};

/// Fills in the outer authenticator of `m`.
void sign_message(ProtocolMessage& m, Principal signer, const KeyRing& keys);
bool verify_message(const ProtocolMessage& m, const KeyRing& keys);

}  // namespace trustlab
