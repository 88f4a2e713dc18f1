#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "trustlab/digest.hpp"
#include "trustlab/types.hpp"

namespace trustlab {

/// Binds a signer to the digest of a message body. In simulation mode `tag` is a
/// keyed hash only the key ring can produce; in Ed25519 mode it is a signature.
struct Authenticator {
  Principal signer;
  Digest payload_digest;
  std::vector<std::uint8_t> tag;
  friend bool operator==(const Authenticator&, const Authenticator&) = default;
};

enum class AttestKind : std::uint8_t { CounterBind, LogAttest, CounterCreate };

/// A trusted component's signed statement Attest(q, k, x).
struct Attestation {
  ComponentId component = 0;
  AttestKind kind = AttestKind::CounterBind;
  std::uint64_t q = 0;
  std::uint64_t k = 0;
  std::optional<Digest> x;
  Authenticator auth;
  friend bool operator==(const Attestation&, const Attestation&) = default;
};

struct Request {
  ClientId client;
  std::uint64_t request_id = 0;
  Batch batch;
  Authenticator auth;

  RequestKey key() const { return {client, request_id}; }
  friend bool operator==(const Request&, const Request&) = default;
};

struct Preprepare {
  View view = 0;
  Seq seq = 0;
  ReplicaId from;
  Batch batch;
  Digest digest;
  std::optional<Attestation> attestation;
  Authenticator auth;
  friend bool operator==(const Preprepare&, const Preprepare&) = default;
};

struct Prepare {
  View view = 0;
  Seq seq = 0;
  ReplicaId from;
  Digest digest;
  std::optional<Attestation> attestation;
  Authenticator auth;
  friend bool operator==(const Prepare&, const Prepare&) = default;
};

/// Commit vote (Pbft and PbftEA families). ZZ-family backups send it unicast to the
/// primary as an execution acknowledgement.
struct Commit {
  View view = 0;
  Seq seq = 0;
  ReplicaId from;
  Digest digest;
  std::optional<Attestation> attestation;
  Authenticator auth;
  friend bool operator==(const Commit&, const Commit&) = default;
};

struct Response {
  View view = 0;
  Seq seq = 0;
  TxnId txn;
  std::uint64_t request_id = 0;
  std::optional<std::uint64_t> result;
  ReplicaId replica;
  Authenticator auth;
  friend bool operator==(const Response&, const Response&) = default;
};

/// Preprepare plus the matching Prepares that committed it.
struct CommitCert {
  Seq seq = 0;
  View view = 0;
  Digest digest;
  std::vector<Prepare> prepares;
  friend bool operator==(const CommitCert&, const CommitCert&) = default;
};

struct CheckpointProof {
  std::vector<Attestation> attestations;
  std::vector<CommitCert> certs;
  friend bool operator==(const CheckpointProof&, const CheckpointProof&) = default;
};

using KvSnapshot = std::vector<std::pair<std::uint64_t, std::uint64_t>>;

struct Checkpoint {
  Seq seq = 0;
  ReplicaId from;
  Digest state_digest;
  CheckpointProof proof;
  KvSnapshot snapshot;
  Authenticator auth;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct ViewChange {
  View new_view = 0;
  ReplicaId from;
  Seq stable_seq = 0;
  std::vector<Preprepare> prepared_set;
  std::vector<CommitCert> committed_set;
  Authenticator auth;
  friend bool operator==(const ViewChange&, const ViewChange&) = default;
};

struct ReproposalEntry {
  Seq seq = 0;
  Digest digest;
  bool noop = false;
  friend bool operator==(const ReproposalEntry&, const ReproposalEntry&) = default;
};

struct NewView {
  View new_view = 0;
  ReplicaId from;
  std::vector<ViewChange> viewchange_set;
  std::vector<ReproposalEntry> repropose_list;
  std::optional<Attestation> counter_cert;
  Authenticator auth;
  friend bool operator==(const NewView&, const NewView&) = default;
};

using ProtocolMessage =
    std::variant<Request, Preprepare, Prepare, Commit, Response, Checkpoint, ViewChange, NewView>;

using MessagePtr = std::shared_ptr<const ProtocolMessage>;

enum class MessageKind : std::uint8_t {
  Request = 0,
  Preprepare,
  Prepare,
  Commit,
  Response,
  Checkpoint,
  ViewChange,
  NewView,
};

inline MessageKind kind_of(const ProtocolMessage& m) { return static_cast<MessageKind>(m.index()); }
std::string_view to_string(MessageKind k);
std::optional<MessageKind> parse_message_kind(std::string_view s);

const Authenticator& auth_of(const ProtocolMessage& m);
Authenticator& auth_of(ProtocolMessage& m);

}  // namespace trustlab
