#include <iostream>

#include <CLI11.hpp>

#include "trustlab/experiment.hpp"
#include "trustlab/explain.hpp"
#include "trustlab/throughput_model.hpp"
#include "trustlab/verdict_io.hpp"

using namespace trustlab;

namespace {

constexpr int kOk = 0;
constexpr int kUnexpectedViolation = 1;
constexpr int kConfigError = 2;

ProtocolKind protocol_or_throw(const std::string& name) {
  auto k = parse_protocol_kind(name);
  if (!k) throw ConfigError("unknown protocol '" + name + "'");
  return *k;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trustlab: trusted-component BFT protocol laboratory"};
  app.require_subcommand(1);

  std::string spec_path;
  RunnerOptions runner;
  std::string out_dir;
  std::uint64_t seed_override = 0;
  bool keep_traces = false;
  auto* run = app.add_subcommand("run", "Run an experiment spec and write metrics");
  run->add_option("spec", spec_path, "YAML experiment spec")->required();
  auto* out_opt = run->add_option("-o,--output", out_dir, "Output directory (overrides spec)");
  auto* seed_opt = run->add_option("--seed", seed_override, "Run a single seed");
  auto* keep_opt = run->add_flag("--keep-traces", keep_traces, "Persist binary traces");
  run->add_option("-j,--jobs", runner.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  run->add_flag("-v,--verbose", runner.verbose, "Print each row as it finishes");

  std::string scenario = "honest";
  std::string protocol = "FlexiBft";
  std::string persistence = "Persistent";
  std::string trace_out;
  bool as_json = false;
  double rtt_ms = 2;
  double access_ms = 0;
  double jitter_ms = 0;
  std::optional<double> horizon_ms;
  ScenarioOptions so;
  auto* sc = app.add_subcommand("scenario", "Run one named scenario and print its verdict");
  sc->add_option("name", scenario, "Scenario name")
      ->check(CLI::IsMember(scenario_names()))
      ->required();
  sc->add_option("-p,--protocol", protocol, "Protocol kind");
  sc->add_option("--f", so.f, "Tolerated faults")->check(CLI::PositiveNumber);
  sc->add_option("--persistence", persistence, "Persistent or Volatile");
  sc->add_option("--seed", so.seed, "Seed");
  sc->add_option("--batch", so.batch, "Batch size")->check(CLI::PositiveNumber);
  sc->add_option("--clients", so.clients, "Clients")->check(CLI::PositiveNumber);
  sc->add_option("--txns", so.txns, "Transactions");
  sc->add_option("--rtt-ms", rtt_ms, "Round-trip time");
  sc->add_option("--access-ms", access_ms, "Trusted-component access latency");
  sc->add_option("--jitter-ms", jitter_ms, "Uniform delay jitter");
  sc->add_option("--horizon-ms", horizon_ms, "Virtual-time horizon");
  sc->add_option("--width", so.pipeline_width, "Pipeline width")->check(CLI::PositiveNumber);
  sc->add_option("--lanes", so.counter_lanes, "Counter lanes")->check(CLI::PositiveNumber);
  sc->add_option("--trace", trace_out, "Write the binary trace here");
  sc->add_flag("--json", as_json, "JSON-lines verdict");

  std::string trace_in;
  std::vector<std::string> filters;
  auto* ex = app.add_subcommand("explain", "Render a trace file as per-replica timelines");
  ex->add_option("trace", trace_in, "Binary trace file")->required();
  ex->add_option("--filter", filters, "key=value with key in {seq, replica, kind}");

  ThroughputParams tp;
  double model_rtt = 1;
  double model_access = 10;
  auto* model = app.add_subcommand("model", "Evaluate the analytic throughput model");
  model->add_option("-p,--protocol", protocol, "Protocol kind");
  model->add_option("--batch", tp.batch)->check(CLI::PositiveNumber);
  model->add_option("--rtt-ms", model_rtt);
  model->add_option("--access-ms", model_access);
  model->add_option("--width", tp.pipeline_width)->check(CLI::PositiveNumber);
  model->add_option("--lanes", tp.counter_lanes)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      auto spec = load_experiment(spec_path);
      if (*out_opt) runner.output = out_dir;
      if (*seed_opt) runner.seed = seed_override;
      if (*keep_opt) runner.keep_traces = keep_traces;
      auto result = run_experiments(std::move(spec), runner);
      std::size_t unsafe = 0;
      for (const auto& r : result.rows) unsafe += !r.verdict.safety_ok;
      std::cout << result.rows.size() << " runs, " << unsafe << " with agreement violations"
                << (result.unexpected_violation ? " (unexpected)" : "") << '\n';
      return result.unexpected_violation ? kUnexpectedViolation : kOk;
    }
    if (*sc) {
      auto p = parse_persistence(persistence);
      if (!p) throw ConfigError("persistence must be Persistent or Volatile");
      so.persistence = *p;
      so.rtt = millis(rtt_ms);
      so.access_latency = millis(access_ms);
      so.jitter = millis(jitter_ms);
      if (horizon_ms) so.horizon = millis(*horizon_ms);
      const auto kind = protocol_or_throw(protocol);
      auto r = run_named_scenario(scenario, kind, so);
      if (!trace_out.empty()) write_trace(r.trace, trace_out);
      if (as_json) {
        write_verdict_jsonl(r.verdict, std::cout,
                            {{"scenario", scenario}, {"protocol", protocol}, {"seed", so.seed}});
      } else {
        write_verdict_text(r.verdict, std::cout);
      }
      const bool unsafe = !r.verdict.safety_ok || !r.verdict.persistence_ok;
      return unsafe && !violation_expected(scenario, kind, so.persistence) ? kUnexpectedViolation
                                                                           : kOk;
    }
    if (*ex) {
      TraceFilter f;
      try {
        f = parse_trace_filter(filters);
      } catch (const FilterError& e) {
        std::cerr << "usage error: " << e.what() << '\n' << ex->help();
        return kConfigError;
      }
      explain_trace(read_trace(trace_in), f, std::cout);
      return kOk;
    }
    if (*model) {
      tp.kind = protocol_or_throw(protocol);
      tp.rtt = millis(model_rtt);
      tp.access_latency = millis(model_access);
      std::cout << throughput_model(tp) << " txn/s\n";
      return kOk;
    }
  } catch (const SpecError& e) {
    std::cerr << spec_path << ':' << e.line << ':' << e.column << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
