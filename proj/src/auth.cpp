#include "trustlab/auth.hpp"

#include <openssl/evp.h>

#include <mutex>
#include <stdexcept>

#include "trustlab/codec.hpp"

namespace trustlab {

struct KeyRing::Ed25519Keys {
  std::mutex mu;
  std::map<Principal, EVP_PKEY*> keys;

  ~Ed25519Keys() {
    for (auto& [p, k] : keys) EVP_PKEY_free(k);
  }
};

KeyRing::KeyRing(std::uint64_t seed, AuthMode mode) : seed_(seed), mode_(mode) {
  if (mode_ == AuthMode::Ed25519) ed_ = std::make_unique<Ed25519Keys>();
}

KeyRing::~KeyRing() = default;

std::array<std::uint8_t, 32> KeyRing::secret(Principal p) const {
  Writer w;
  w.str("trustlab-key");
  w.u64(seed_);
  w.u8(static_cast<std::uint8_t>(p.kind));
  w.u32(p.id);
  return digest_of(w.buffer()).bytes;
}

namespace {

EVP_PKEY* key_for(std::mutex& mu, std::map<Principal, EVP_PKEY*>& keys, Principal p,
                  const std::array<std::uint8_t, 32>& seed) {
  std::lock_guard lock(mu);
  auto it = keys.find(p);
  if (it != keys.end()) return it->second;
  EVP_PKEY* k = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size());
  if (k == nullptr) throw std::runtime_error("Ed25519 key derivation failed");
  keys.emplace(p, k);
  return k;
}

std::vector<std::uint8_t> simulated_tag(const std::array<std::uint8_t, 32>& secret,
                                        const Digest& payload) {
  Writer w;
  for (auto b : secret) w.u8(b);
  w.digest(payload);
  auto d = digest_of(w.buffer());
  return {d.bytes.begin(), d.bytes.begin() + 16};
}

}  // namespace

Authenticator KeyRing::sign(Principal signer, const Digest& payload) const {
  Authenticator a{signer, payload, {}};
  auto s = secret(signer);
  if (mode_ == AuthMode::Simulated) {
    a.tag = simulated_tag(s, payload);
    return a;
  }
  EVP_PKEY* k = key_for(ed_->mu, ed_->keys, signer, s);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  std::size_t len = 64;
  a.tag.resize(len);
  bool ok = EVP_DigestSignInit(ctx, nullptr, nullptr, nullptr, k) == 1 &&
            EVP_DigestSign(ctx, a.tag.data(), &len, payload.bytes.data(), payload.bytes.size()) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("Ed25519 signing failed");
  a.tag.resize(len);
  return a;
}

bool KeyRing::verify(const Authenticator& a, const Digest& payload) const {
  if (a.payload_digest != payload) return false;
  auto s = secret(a.signer);
  if (mode_ == AuthMode::Simulated) return a.tag == simulated_tag(s, payload);
  EVP_PKEY* k = key_for(ed_->mu, ed_->keys, a.signer, s);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  bool ok = EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, k) == 1 &&
            EVP_DigestVerify(ctx, a.tag.data(), a.tag.size(), payload.bytes.data(),
                             payload.bytes.size()) == 1;
  EVP_MD_CTX_free(ctx);
  return ok;
}

void KeyRing::register_component(ComponentId c, ReplicaId owner) { owners_[c] = owner; }

std::optional<ReplicaId> KeyRing::owner_of(ComponentId c) const {
  auto it = owners_.find(c);
  if (it == owners_.end()) return std::nullopt;
  return it->second;
}

void sign_message(ProtocolMessage& m, Principal signer, const KeyRing& keys) {
  auth_of(m) = keys.sign(signer, body_digest(m));
}

bool verify_message(const ProtocolMessage& m, const KeyRing& keys) {
  return keys.verify(auth_of(m), body_digest(m));
}

}  // namespace trustlab
