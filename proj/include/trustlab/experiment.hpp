#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trustlab/scenarios.hpp"

namespace trustlab {

/// A spec file problem, positioned at a 1-based line and column.
class SpecError : public std::runtime_error {
 public:
  SpecError(const std::string& what, int line, int column)
      : std::runtime_error(what), line(line), column(column) {}
  int line;
  int column;
};

struct ExperimentSpec {
  std::string scenario = "honest";
  std::vector<ProtocolKind> protocols;
  std::vector<std::uint32_t> f{1};
  std::vector<std::uint32_t> batch{1};
  std::vector<SimTime> access_latency{0};
  SimTime rtt = millis(2);
  SimTime jitter = 0;
  std::vector<std::uint64_t> seeds{1};
  Persistence persistence = Persistence::Persistent;
  std::uint32_t clients = 1;
  std::optional<std::uint64_t> txns;
  std::optional<SimTime> horizon;
  std::uint32_t pipeline_width = 64;
  std::uint32_t counter_lanes = 1;
  std::filesystem::path output = "results";
  bool keep_traces = false;
};

ExperimentSpec parse_experiment(const std::string& text);
ExperimentSpec load_experiment(const std::filesystem::path& file);

struct RunTag {
  ProtocolKind kind;
  std::uint32_t f = 1;
  std::uint32_t n = 0;
  std::uint32_t batch = 1;
  SimTime access_latency = 0;
  std::uint64_t seed = 1;
};

struct RunRow {
  RunTag tag;
  Verdict verdict;
  bool expected_violation = false;
};

struct RunnerOptions {
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
  std::optional<bool> keep_traces;
  unsigned jobs = 1;
  bool verbose = false;
};

struct ExperimentResult {
  std::vector<RunRow> rows;
  bool unexpected_violation = false;
};

/// The run matrix in output order: protocols, then f, batch, access latency, seed.
std::vector<RunTag> run_matrix(const ExperimentSpec& spec);

/// Runs every cell, writes metrics.csv and verdicts.jsonl (and traces when kept) to the output
/// directory. Throws ConfigError for an invalid regime or f.
ExperimentResult run_experiments(ExperimentSpec spec, const RunnerOptions& opts);

std::string metrics_header();
std::string metrics_row(const ExperimentSpec& spec, const RunRow& row);

}  // namespace trustlab
