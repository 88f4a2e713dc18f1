#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "trustlab/types.hpp"

namespace trustlab {

enum class KeyDistribution : std::uint8_t { Uniform, Zipf };

struct Workload {
  std::uint64_t n_records = 600000;
  std::uint64_t n_txns = 0;
  double read_fraction = 0.5;
  KeyDistribution distribution = KeyDistribution::Uniform;
  double zipf_theta = 0.99;
  std::uint64_t seed = 1;
};

/// Deterministic stream of Put/Get operations over keys [0, n_records).
class WorkloadStream {
 public:
  explicit WorkloadStream(const Workload& w);
  Operation next();

 private:
  std::uint64_t draw_key();

  Workload w_;
  std::mt19937_64 rng_;
  std::vector<double> cdf_;
};

/// The first `w.n_txns` operations of WorkloadStream(w).
std::vector<Operation> generate_workload(const Workload& w);

}  // namespace trustlab
