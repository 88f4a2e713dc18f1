#pragma once

#include <random>

#include "trustlab/messages.hpp"

namespace testgen {

using namespace trustlab;
using Rng = std::mt19937_64;

inline Digest digest(Rng& r) {
  Digest d;
  for (auto& b : d.bytes) b = static_cast<std::uint8_t>(r());
  return d;
}

inline Principal principal(Rng& r) {
  return {static_cast<Principal::Kind>(r() % 3), static_cast<std::uint32_t>(r() % 100)};
}

inline Authenticator auth(Rng& r) {
  Authenticator a{principal(r), digest(r), {}};
  a.tag.resize(r() % 65);
  for (auto& b : a.tag) b = static_cast<std::uint8_t>(r());
  return a;
}

inline Transaction txn(Rng& r) {
  Transaction t{ClientId{static_cast<std::uint32_t>(r() % 50)}, r() % 1000, Noop{}};
  switch (r() % 3) {
    case 0: t.op = Put{r(), r()}; break;
    case 1: t.op = Get{r()}; break;
    default: break;
  }
  return t;
}

inline Batch batch(Rng& r) {
  Batch b(r() % 4);
  for (auto& t : b) t = txn(r);
  return b;
}

inline std::optional<Attestation> attestation(Rng& r) {
  if (r() % 3 == 0) return std::nullopt;
  Attestation a;
  a.component = static_cast<ComponentId>(r() % 8);
  a.kind = static_cast<AttestKind>(r() % 3);
  a.q = r() % 64;
  a.k = r();
  if (a.kind != AttestKind::CounterCreate) a.x = digest(r);
  a.auth = auth(r);
  return a;
}

inline ReplicaId replica(Rng& r) { return ReplicaId{static_cast<std::uint32_t>(r() % 7)}; }

inline Preprepare preprepare(Rng& r) {
  return {r() % 9, r() % 100, replica(r), batch(r), digest(r), attestation(r), auth(r)};
}

inline Prepare prepare(Rng& r) {
  return {r() % 9, r() % 100, replica(r), digest(r), attestation(r), auth(r)};
}

inline CommitCert cert(Rng& r) {
  CommitCert c{r() % 100, r() % 9, digest(r), {}};
  for (auto i = r() % 3; i > 0; --i) c.prepares.push_back(prepare(r));
  return c;
}

inline ViewChange view_change(Rng& r) {
  ViewChange v{r() % 9, replica(r), r() % 50, {}, {}, auth(r)};
  for (auto i = r() % 3; i > 0; --i) v.prepared_set.push_back(preprepare(r));
  for (auto i = r() % 3; i > 0; --i) v.committed_set.push_back(cert(r));
  return v;
}

/// A random message of variant `tag`.
inline ProtocolMessage random_message(Rng& r, std::size_t tag) {
  switch (tag % 8) {
    case 0:
      return Request{ClientId{static_cast<std::uint32_t>(r() % 50)}, r(), batch(r), auth(r)};
    case 1:
      return preprepare(r);
    case 2:
      return prepare(r);
    case 3:
      return Commit{r() % 9, r() % 100, replica(r), digest(r), attestation(r), auth(r)};
    case 4: {
      Response x{r() % 9, r() % 100, txn(r).id(), r(), std::nullopt, replica(r), auth(r)};
      if (r() % 2) x.result = r();
      return x;
    }
    case 5: {
      Checkpoint c{r() % 100, replica(r), digest(r), {}, {}, auth(r)};
      for (auto i = r() % 3; i > 0; --i) {
        if (auto a = attestation(r)) c.proof.attestations.push_back(*a);
      }
      for (auto i = r() % 2; i > 0; --i) c.proof.certs.push_back(cert(r));
      for (auto i = r() % 4; i > 0; --i) c.snapshot.emplace_back(r(), r());
      return c;
    }
    case 6:
      return view_change(r);
    default: {
      NewView n{r() % 9, replica(r), {}, {}, attestation(r), auth(r)};
      for (auto i = r() % 3; i > 0; --i) n.viewchange_set.push_back(view_change(r));
      for (auto i = r() % 4; i > 0; --i) {
        n.repropose_list.push_back({r() % 100, digest(r), r() % 2 == 0});
      }
      return n;
    }
  }
}

}  // namespace testgen
