#include "trustlab/workload.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trustlab {

WorkloadStream::WorkloadStream(const Workload& w) : w_(w), rng_(w.seed) {
  if (w_.n_records == 0) throw ConfigError("workload needs at least one record");
  if (w_.distribution == KeyDistribution::Zipf) {
    cdf_.resize(w_.n_records);
    double acc = 0;
    for (std::uint64_t i = 0; i < w_.n_records; ++i) {
      acc += 1.0 / std::pow(static_cast<double>(i + 1), w_.zipf_theta);
      cdf_[i] = acc;
    }
    for (auto& c : cdf_) c /= acc;
  }
}

std::uint64_t WorkloadStream::draw_key() {
  if (w_.distribution == KeyDistribution::Uniform) {
    return std::uniform_int_distribution<std::uint64_t>(0, w_.n_records - 1)(rng_);
  }
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<std::uint64_t>(it - cdf_.begin());
}

Operation WorkloadStream::next() {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  auto key = draw_key();
  if (u < w_.read_fraction) return Get{key};
  return Put{key, rng_()};
}

std::vector<Operation> generate_workload(const Workload& w) {
  WorkloadStream s(w);
  std::vector<Operation> out;
  out.reserve(w.n_txns);
  for (std::uint64_t i = 0; i < w.n_txns; ++i) out.push_back(s.next());
  return out;
}

}  // namespace trustlab
