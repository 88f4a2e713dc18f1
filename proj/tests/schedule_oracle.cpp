#include "schedule_oracle.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trustlab/codec.hpp"
#include "trustlab/replica.hpp"
#include "trustlab/well_formed.hpp"

namespace oracle {

using namespace trustlab;

namespace {

constexpr std::uint32_t kByzantine = 0;

enum class Move : std::uint8_t { ProposeA, ProposeB, Rollback, PrepareA, PrepareB, CommitA, CommitB };

/// Two independent 64-bit hashes of a state key; collisions are negligible at this scale.
struct Fingerprint {
  std::uint64_t h1, h2;
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& f) const { return f.h1; }
};

Fingerprint fingerprint(const std::string& k) {
  std::uint64_t fnv = 1469598103934665603ull;
  for (unsigned char c : k) fnv = (fnv ^ c) * 1099511628211ull;
  return {std::hash<std::string>{}(k), fnv};
}

struct Pending {
  std::uint32_t to;
  std::uint32_t msg;
  friend auto operator<=>(const Pending&, const Pending&) = default;
};

struct State {
  std::vector<std::vector<std::uint32_t>> history;  // per replica, message ids delivered
  std::vector<Pending> pending;  // every message sent so far, sorted; any may be (re)delivered
  std::string path;
};

/// Outcome of replaying one replica's history.
struct Replay {
  Digest state;
  std::vector<Pending> sent_to;
  std::map<Seq, Digest> executed;
};

class Search {
 public:
  Search(ProtocolKind kind, Persistence p, std::uint32_t horizon)
      : keys_(5), horizon_(horizon) {
    opts_.kind = kind;
    opts_.cfg = config_for(kind, 1);
    opts_.persistence = p;
    for (std::uint32_t i = 0; i < opts_.cfg.n; ++i) keys_.register_component(i, ReplicaId{i});
    batch_[0] = {Transaction{ClientId{1}, 1, Put{7, 1}}};
    batch_[1] = {Transaction{ClientId{1000000}, 0, Put{7, 0xbad}}};
    quorum_ = quorums(kind, opts_.cfg).client;
  }

  SearchResult run() {
    for (const auto& moves : strategies()) {
      State root;
      root.history.resize(opts_.cfg.n);
      for (auto id : byzantine(moves)) {
        for (std::uint32_t r = 0; r < opts_.cfg.n; ++r) {
          if (r != kByzantine) root.pending.push_back({r, id});
        }
      }
      std::sort(root.pending.begin(), root.pending.end());
      explore(root);
    }
    result_.states = visited_.size();
    result_.saturated = !result_.violation && result_.depth < horizon_;
    return result_;
  }

 private:
  std::uint32_t intern(const ProtocolMessage& m) {
    auto bytes = encode(m);
    std::string key(bytes.begin(), bytes.end());
    auto [it, fresh] = ids_.try_emplace(key, static_cast<std::uint32_t>(messages_.size()));
    if (fresh) messages_.push_back(std::make_shared<const ProtocolMessage>(m));
    return it->second;
  }

  /// Messages the faulty primary can produce after applying `moves` to a fresh component.
  std::vector<std::uint32_t> byzantine(const std::vector<Move>& moves) {
    Replica primary(ReplicaId{kByzantine}, opts_, keys_);
    const auto genesis = primary.tc().snapshot();
    std::vector<std::uint32_t> out;
    for (auto m : moves) {
      switch (m) {
        case Move::ProposeA:
        case Move::ProposeB: {
          SimTime ready = 0;
          auto pp = primary.forge_preprepare(0, 1, batch_[m == Move::ProposeB], 0, ready);
          out.push_back(intern(ProtocolMessage{pp}));
          break;
        }
        case Move::Rollback:
          primary.tc().adversary_rollback(genesis, 0);
          break;
        case Move::PrepareA:
        case Move::PrepareB: {
          ProtocolMessage vote{Prepare{0, 1, ReplicaId{kByzantine},
                                       batch_digest(batch_[m == Move::PrepareB]), {}, {}}};
          sign_message(vote, Principal::replica(ReplicaId{kByzantine}), keys_);
          out.push_back(intern(vote));
          break;
        }
        case Move::CommitA:
        case Move::CommitB: {
          ProtocolMessage vote{Commit{0, 1, ReplicaId{kByzantine},
                                      batch_digest(batch_[m == Move::CommitB]), {}, {}}};
          sign_message(vote, Principal::replica(ReplicaId{kByzantine}), keys_);
          out.push_back(intern(vote));
          break;
        }
      }
    }
    return out;
  }

  const Replay& replay(std::uint32_t r, const std::vector<std::uint32_t>& history) {
    std::string key(reinterpret_cast<const char*>(history.data()), history.size() * 4);
    key.push_back(static_cast<char>(r));
    if (auto it = replays_.find(key); it != replays_.end()) return it->second;
    ++result_.replays;
    Replica replica(ReplicaId{r}, opts_, keys_);
    Replay out;
    for (std::size_t i = 0; i < history.size(); ++i) {
      const auto& m = *messages_[history[i]];
      if (!is_well_formed(m, {keys_, opts_.kind, opts_.cfg})) continue;
      auto fx = replica.on_message(m, 0);
      for (const auto& n : fx.notes) {
        if (n.kind == TraceKind::Executed) out.executed[n.seq] = n.digest;
      }
      if (i + 1 != history.size()) continue;
      for (const auto& o : fx.out) {
        if (o.to == Outgoing::To::Client) continue;
        const auto id = intern(*o.msg);
        if (o.to == Outgoing::To::AllReplicas) {
          for (std::uint32_t t = 0; t < opts_.cfg.n; ++t) {
            if (t != kByzantine) out.sent_to.push_back({t, id});
          }
        } else if (o.id != kByzantine) {
          out.sent_to.push_back({o.id, id});
        }
      }
    }
    out.state = replica.fingerprint();
    return replays_.emplace(std::move(key), std::move(out)).first->second;
  }

  bool violated(const State& s) {
    std::map<Seq, std::map<Digest, std::uint32_t>> votes;
    for (std::uint32_t r = 0; r < opts_.cfg.n; ++r) {
      if (r == kByzantine) continue;
      for (const auto& [seq, d] : replay(r, s.history[r]).executed) ++votes[seq][d];
    }
    const bool speculative = traits(opts_.kind).speculative;
    for (const auto& [seq, by_digest] : votes) {
      std::size_t decided = 0;
      for (const auto& [d, count] : by_digest) {
        // A speculative result counts once enough replicas, the faulty one included, vouch for it.
        decided += speculative ? count + opts_.cfg.f >= quorum_ : count > 0;
      }
      if (decided > 1) return true;
    }
    return false;
  }

  std::string key(const State& s) {
    std::string k;
    for (std::uint32_t r = 0; r < opts_.cfg.n; ++r) {
      if (r == kByzantine) continue;
      const auto& d = replay(r, s.history[r]).state;
      k.append(reinterpret_cast<const char*>(&d), sizeof d);
    }
    k.push_back('#');
    k.append(reinterpret_cast<const char*>(s.pending.data()), s.pending.size() * sizeof(Pending));
    return k;
  }

  /// Component histories open to the faulty primary: one proposal per component epoch, with
  /// a single rollback when the component allows it. Creating a message changes no honest
  /// state, so each strategy is applied up front and its messages wait in the pool.
  std::vector<std::vector<Move>> strategies() const {
    using M = Move;
    std::vector<M> votes;
    const auto& t = traits(opts_.kind);
    if (t.attest == AttestStyle::None || t.attest == AttestStyle::PrimaryOnly) {
      votes = {M::PrepareA, M::PrepareB};
      if (t.commit_phase) votes.insert(votes.end(), {M::CommitA, M::CommitB});
    }
    std::vector<std::vector<M>> out;
    if (opts_.persistence == Persistence::Volatile) {
      out.push_back({M::ProposeA, M::Rollback, M::ProposeB});
    } else {
      out.push_back({M::ProposeA, M::ProposeB});
      out.push_back({M::ProposeB, M::ProposeA});
    }
    for (auto& s : out) s.insert(s.end(), votes.begin(), votes.end());
    return out;
  }

  /// Breadth-first, so every state is first reached by a shortest schedule.
  void explore(State root) {
    std::vector<State> level;
    if (admit(root)) level.push_back(std::move(root));
    for (std::uint32_t depth = 0; depth < horizon_ && !level.empty(); ++depth) {
      std::vector<State> next_level;
      for (const auto& s : level) {
        for (std::size_t i = 0; i < s.pending.size(); ++i) {
          if (i > 0 && s.pending[i] == s.pending[i - 1]) continue;
          const auto p = s.pending[i];
          State next = s;
          next.history[p.to].push_back(p.msg);
          const auto& before = replay(p.to, s.history[p.to]);
          const auto& after = replay(p.to, next.history[p.to]);
          // A delivery that changes nothing leaves a state dominated by its predecessor.
          if (after.state == before.state && after.sent_to.empty()) continue;
          next.path += "deliver(" + std::to_string(p.msg) + "->r" + std::to_string(p.to) + ") ";
          next.pending.insert(next.pending.end(), after.sent_to.begin(), after.sent_to.end());
          std::sort(next.pending.begin(), next.pending.end());
          next.pending.erase(std::unique(next.pending.begin(), next.pending.end()),
                             next.pending.end());
          if (admit(next)) next_level.push_back(std::move(next));
          if (result_.violation) return;
        }
      }
      level = std::move(next_level);
      result_.depth = std::max(result_.depth, level.empty() ? depth : depth + 1);
      if (std::getenv("ORACLE_TRACE")) {
        std::fprintf(stderr, "depth %u: %zu new states, %zu total\n", depth + 1, level.size(),
                     visited_.size());
      }
    }
  }

  bool admit(const State& s) {
    if (!visited_.insert(fingerprint(key(s))).second) return false;
    if (violated(s)) {
      result_.violation = true;
      result_.witness = s.path;
    }
    return true;
  }

  KeyRing keys_;
  std::uint32_t horizon_;
  ReplicaOptions opts_;
  Batch batch_[2];
  std::uint32_t quorum_ = 0;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<MessagePtr> messages_;
  std::unordered_map<std::string, Replay> replays_;
  std::unordered_set<Fingerprint, FingerprintHash> visited_;
  SearchResult result_;
};

}  // namespace

SearchResult search_rollback_schedules(ProtocolKind kind, Persistence persistence,
                                       std::uint32_t horizon) {
  return Search(kind, persistence, horizon).run();
}

}  // namespace oracle
