#include "trustlab/types.hpp"

namespace trustlab {

std::string to_string(const Principal& p) {
  switch (p.kind) {
    case Principal::Kind::Replica: return "r" + std::to_string(p.id);
    case Principal::Kind::Client: return "c" + std::to_string(p.id);
    case Principal::Kind::Trusted: return "tc" + std::to_string(p.id);
  }
  return "?";
}

SystemConfig SystemConfig::make(std::uint32_t f, Regime regime, std::uint32_t batch_size,
                                Seq checkpoint_period) {
  SystemConfig cfg;
  cfg.f = f;
  cfg.regime = regime;
  cfg.n = regime == Regime::TwoFPlusOne ? 2 * f + 1 : 3 * f + 1;
  cfg.batch_size = batch_size;
  cfg.checkpoint_period = checkpoint_period;
  return cfg;
}

void SystemConfig::validate() const {
  const std::uint32_t want = regime == Regime::TwoFPlusOne ? 2 * f + 1 : 3 * f + 1;
  if (n != want) {
    throw ConfigError("replica count n=" + std::to_string(n) + " does not match f=" +
                      std::to_string(f) + " under the " +
                      (regime == Regime::TwoFPlusOne ? "2f+1" : "3f+1") + " regime");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (checkpoint_period == 0) throw ConfigError("checkpoint_period must be positive");
}

Batch noop_batch(Seq seq) { return Batch{Transaction{ClientId::system(), seq, Noop{}}}; }

bool is_noop_batch(const Batch& b) {
  return b.size() == 1 && b.front().client.is_system() &&
         std::holds_alternative<Noop>(b.front().op);
}

}  // namespace trustlab
