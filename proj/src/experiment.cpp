#include "trustlab/experiment.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "trustlab/verdict_io.hpp"

namespace trustlab {

namespace {

[[noreturn]] void fail(const YAML::Node& n, const std::string& what) {
  const auto m = n.Mark();
  throw SpecError(what, m.line + 1, m.column + 1);
}

template <class T>
T scalar(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, key + ": expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(n, key + ": bad value '" + n.Scalar() + "'");
  }
}

template <class T>
std::vector<T> list(const YAML::Node& n, const std::string& key) {
  if (n.IsScalar()) return {scalar<T>(n, key)};
  if (!n.IsSequence() || n.size() == 0) fail(n, key + ": expected a value or a non-empty list");
  std::vector<T> out;
  for (const auto& x : n) out.push_back(scalar<T>(x, key));
  return out;
}

SimTime ms(double v) { return millis(v); }

std::vector<SimTime> ms_list(const YAML::Node& n, const std::string& key) {
  std::vector<SimTime> out;
  for (double v : list<double>(n, key)) {
    if (v < 0) fail(n, key + ": negative duration");
    out.push_back(ms(v));
  }
  return out;
}

std::string trace_name(const RunTag& t) {
  std::ostringstream os;
  os << to_string(t.kind) << "_f" << t.f << "_b" << t.batch << "_a" << t.access_latency << "_s"
     << t.seed << ".tltrace";
  return os.str();
}

}  // namespace

ExperimentSpec parse_experiment(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw SpecError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) fail(root, "spec must be a mapping");
  ExperimentSpec s;
  bool have_protocols = false;
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    const auto& v = kv.second;
    if (key == "scenario") {
      s.scenario = scalar<std::string>(v, key);
      const auto& names = scenario_names();
      if (std::find(names.begin(), names.end(), s.scenario) == names.end()) {
        fail(v, "unknown scenario '" + s.scenario + "'");
      }
    } else if (key == "protocols") {
      have_protocols = true;
      for (const auto& name : list<std::string>(v, key)) {
        auto k = parse_protocol_kind(name);
        if (!k) fail(v, "unknown protocol '" + name + "'");
        s.protocols.push_back(*k);
      }
    } else if (key == "f") {
      s.f = list<std::uint32_t>(v, key);
      for (auto f : s.f) {
        if (f == 0) fail(v, "f must be at least 1");
      }
    } else if (key == "batch") {
      s.batch = list<std::uint32_t>(v, key);
      for (auto b : s.batch) {
        if (b == 0) fail(v, "batch must be at least 1");
      }
    } else if (key == "access_latency_ms") {
      s.access_latency = ms_list(v, key);
    } else if (key == "rtt_ms") {
      s.rtt = ms(scalar<double>(v, key));
    } else if (key == "jitter_ms") {
      s.jitter = ms(scalar<double>(v, key));
    } else if (key == "seeds") {
      if (v.IsMap()) {
        auto from = scalar<std::uint64_t>(v["from"], "seeds.from");
        auto count = scalar<std::uint64_t>(v["count"], "seeds.count");
        s.seeds.clear();
        for (std::uint64_t i = 0; i < count; ++i) s.seeds.push_back(from + i);
      } else {
        s.seeds = list<std::uint64_t>(v, key);
      }
    } else if (key == "persistence") {
      auto p = parse_persistence(scalar<std::string>(v, key));
      if (!p) fail(v, "persistence must be Persistent or Volatile");
      s.persistence = *p;
    } else if (key == "clients") {
      s.clients = scalar<std::uint32_t>(v, key);
      if (s.clients == 0) fail(v, "clients must be at least 1");
    } else if (key == "txns") {
      s.txns = scalar<std::uint64_t>(v, key);
    } else if (key == "horizon_ms") {
      s.horizon = ms(scalar<double>(v, key));
    } else if (key == "pipeline_width") {
      s.pipeline_width = scalar<std::uint32_t>(v, key);
    } else if (key == "counter_lanes") {
      s.counter_lanes = scalar<std::uint32_t>(v, key);
    } else if (key == "output") {
      s.output = scalar<std::string>(v, key);
    } else if (key == "keep_traces") {
      s.keep_traces = scalar<bool>(v, key);
    } else {
      fail(kv.first, "unknown key '" + key + "'");
    }
  }
  if (!have_protocols) fail(root, "missing required key 'protocols'");
  return s;
}

ExperimentSpec load_experiment(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SpecError("cannot open " + file.string(), 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

std::vector<RunTag> run_matrix(const ExperimentSpec& spec) {
  std::vector<RunTag> out;
  for (auto k : spec.protocols) {
    for (auto f : spec.f) {
      const auto n = traits(k).regime == Regime::TwoFPlusOne ? 2 * f + 1 : 3 * f + 1;
      for (auto b : spec.batch) {
        for (auto a : spec.access_latency) {
          for (auto s : spec.seeds) out.push_back({k, f, n, b, a, s});
        }
      }
    }
  }
  return out;
}

std::string metrics_header() {
  return "scenario,protocol,f,n,batch,access_latency_us,rtt_us,persistence,seed,tps,"
         "mean_latency_us,completed_txns,safety_ok,persistence_ok,rsm_liveness_ok,"
         "consensus_liveness_ok,aborted,expected_violation,violations";
}

std::string metrics_row(const ExperimentSpec& spec, const RunRow& row) {
  const auto& t = row.tag;
  const auto& v = row.verdict;
  std::ostringstream os;
  os << spec.scenario << ',' << to_string(t.kind) << ',' << t.f << ',' << t.n << ',' << t.batch
     << ',' << t.access_latency << ',' << spec.rtt << ',' << to_string(spec.persistence) << ','
     << t.seed << ',' << std::fixed;
  os.precision(1);
  os << v.stats.tps << ',' << v.stats.mean_latency_us << ',';
  os << v.stats.completed_txns << ',' << v.safety_ok << ',' << v.persistence_ok << ','
     << v.rsm_liveness_ok << ',' << v.consensus_liveness_ok << ',' << v.aborted << ','
     << row.expected_violation << ',' << v.violations.size();
  return os.str();
}

ExperimentResult run_experiments(ExperimentSpec spec, const RunnerOptions& opts) {
  if (opts.output) spec.output = *opts.output;
  if (opts.seed) spec.seeds = {*opts.seed};
  if (opts.keep_traces) spec.keep_traces = *opts.keep_traces;

  const auto matrix = run_matrix(spec);
  std::filesystem::create_directories(spec.output);
  if (spec.keep_traces) std::filesystem::create_directories(spec.output / "traces");

  ExperimentResult result;
  result.rows.resize(matrix.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  std::exception_ptr error;

  auto worker = [&] {
    for (std::size_t i = next++; i < matrix.size(); i = next++) {
      const auto& tag = matrix[i];
      try {
        ScenarioOptions o;
        o.f = tag.f;
        o.persistence = spec.persistence;
        o.rtt = spec.rtt;
        o.jitter = spec.jitter;
        o.batch = tag.batch;
        o.access_latency = tag.access_latency;
        o.pipeline_width = spec.pipeline_width;
        o.counter_lanes = spec.counter_lanes;
        o.clients = spec.clients;
        o.txns = spec.txns;
        o.horizon = spec.horizon;
        o.seed = tag.seed;
        o.level = spec.keep_traces ? TraceLevel::Full : TraceLevel::Summary;
        auto r = run_named_scenario(spec.scenario, tag.kind, o);
        if (spec.keep_traces) write_trace(r.trace, spec.output / "traces" / trace_name(tag));
        RunRow row{tag, std::move(r.verdict),
                   violation_expected(spec.scenario, tag.kind, spec.persistence)};
        if (opts.verbose) {
          std::lock_guard lock(log_mu);
          std::cerr << metrics_row(spec, row) << '\n';
        }
        result.rows[i] = std::move(row);
      } catch (...) {
        std::lock_guard lock(log_mu);
        if (!error) error = std::current_exception();
        next = matrix.size();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, matrix.size()));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::ofstream csv(spec.output / "metrics.csv");
  std::ofstream jsonl(spec.output / "verdicts.jsonl");
  csv << metrics_header() << '\n';
  for (const auto& row : result.rows) {
    csv << metrics_row(spec, row) << '\n';
    nlohmann::json tags{{"scenario", spec.scenario},
                        {"protocol", std::string(to_string(row.tag.kind))},
                        {"f", row.tag.f},
                        {"batch", row.tag.batch},
                        {"access_latency_us", row.tag.access_latency},
                        {"seed", row.tag.seed}};
    write_verdict_jsonl(row.verdict, jsonl, tags);
    const bool unsafe = !row.verdict.safety_ok || !row.verdict.persistence_ok;
    if (unsafe && !row.expected_violation) result.unexpected_violation = true;
  }
  return result;
}

}  // namespace trustlab
