#include "trustlab/protocol_kind.hpp"

#include <array>

namespace trustlab {

namespace {

using R = Regime;
using A = AttestStyle;

// kind, regime, phases, sequential, speculative, commit_phase, flexi, attest
constexpr std::array<ProtocolTraits, 9> kTraits{{
    {ProtocolKind::Pbft, R::ThreeFPlusOne, 3, false, false, true, false, A::None},
    {ProtocolKind::PbftEA, R::TwoFPlusOne, 3, true, false, true, false, A::Log},
    {ProtocolKind::OPbftEA, R::TwoFPlusOne, 3, false, false, true, false, A::Log},
    {ProtocolKind::MinBft, R::TwoFPlusOne, 2, true, false, false, false, A::Counter},
    {ProtocolKind::MinZZ, R::TwoFPlusOne, 1, true, true, false, false, A::PrimaryOnly},
    {ProtocolKind::FlexiBft, R::ThreeFPlusOne, 2, false, false, false, true, A::PrimaryOnly},
    {ProtocolKind::FlexiZZ, R::ThreeFPlusOne, 1, false, true, false, true, A::PrimaryOnly},
    {ProtocolKind::OFlexiBft, R::ThreeFPlusOne, 2, true, false, false, true, A::PrimaryOnly},
    {ProtocolKind::OFlexiZZ, R::ThreeFPlusOne, 1, true, true, false, true, A::PrimaryOnly},
}};

constexpr std::array<std::string_view, 9> kNames{
    "Pbft", "PbftEA", "OPbftEA", "MinBft", "MinZZ", "FlexiBft", "FlexiZZ", "OFlexiBft", "OFlexiZZ",
};

}  // namespace

std::string_view to_string(ProtocolKind k) { return kNames[static_cast<std::size_t>(k)]; }

std::optional<ProtocolKind> parse_protocol_kind(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == s) return static_cast<ProtocolKind>(i);
  }
  return std::nullopt;
}

const std::vector<ProtocolKind>& all_protocol_kinds() {
  static const std::vector<ProtocolKind> all = [] {
    std::vector<ProtocolKind> v;
    for (const auto& t : kTraits) v.push_back(t.kind);
    return v;
  }();
  return all;
}

const ProtocolTraits& traits(ProtocolKind k) { return kTraits[static_cast<std::size_t>(k)]; }

std::uint64_t log_id(View v, LogPhase p) { return v * 8 + static_cast<std::uint64_t>(p); }

Quorums quorums(ProtocolKind k, const SystemConfig& cfg, bool all_n_client) {
  const auto& t = traits(k);
  const std::uint32_t f = cfg.f;
  const std::uint32_t big = 2 * f + 1;
  const std::uint32_t small = f + 1;
  const bool wide = t.regime == Regime::ThreeFPlusOne;

  Quorums q{};
  q.prepare = wide ? big : small;
  q.commit = wide ? big : small;
  if (k == ProtocolKind::MinZZ) {
    q.client = cfg.n;
  } else if (t.speculative) {
    q.client = big;
  } else {
    q.client = small;
  }
  if (all_n_client) q.client = cfg.n;
  q.checkpoint = wide ? big : small;
  q.new_view = wide ? big : small;
  q.join_view_change = small;
  return q;
}

SystemConfig config_for(ProtocolKind k, std::uint32_t f, std::uint32_t batch_size,
                        Seq checkpoint_period) {
  return SystemConfig::make(f, traits(k).regime, batch_size, checkpoint_period);
}

}  // namespace trustlab
