#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "masuq/commands.hpp"
#include "masuq/config.hpp"
#include "masuq/error.hpp"

namespace {

using masuq::CliConfig;

// Flags left unset keep whatever the config file chose.
struct RunFlags {
  std::string config, arch, dataset, out, mock_script, endpoint, arch_spec, model;
  std::optional<int> rounds, parallelism, max_tokens, logprob_k;
  std::optional<double> temperature, top_p;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> virtual_start;
};

CliConfig resolve(const RunFlags& f) {
  CliConfig c;
  if (!f.config.empty()) masuq::load_config_file(c, f.config);
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) masuq::apply_config_value(c, key, v);
  };
  set("architecture", f.arch);
  set("dataset", f.dataset);
  set("out_dir", f.out);
  set("arch_spec", f.arch_spec);
  set("model", f.model);
  // Either gateway flag replaces a gateway chosen in the config file.
  if (!f.mock_script.empty()) {
    c.endpoint.clear();
    c.mock_script = f.mock_script;
  }
  if (!f.endpoint.empty()) {
    c.mock_script.clear();
    c.endpoint = f.endpoint;
  }
  if (f.rounds) c.rounds = *f.rounds;
  if (f.parallelism) c.parallelism = *f.parallelism;
  if (f.max_tokens) c.sampling.max_tokens = *f.max_tokens;
  if (f.logprob_k) c.sampling.logprob_k = *f.logprob_k;
  if (f.temperature) c.sampling.temperature = *f.temperature;
  if (f.top_p) c.sampling.top_p = *f.top_p;
  if (f.seed) c.seed = *f.seed;
  if (f.virtual_start) c.virtual_start_ms = *f.virtual_start;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent entropy toolkit: run topologies, extract features, judge answers"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run a topology over a dataset and record a trace");
  run->add_option("--config", rf.config, "key = value configuration file");
  run->add_option("--arch", rf.arch, "single | sequential | centralized | debate | hybrid");
  run->add_option("--rounds", rf.rounds, "Interaction rounds R (1-5)");
  run->add_option("--dataset", rf.dataset, "Dataset JSONL");
  run->add_option("--out", rf.out, "Output directory; the run goes to <out>/<run_id>/");
  run->add_option("--mock-script", rf.mock_script, "Scripted gateway JSON");
  run->add_option("--endpoint", rf.endpoint, "Chat-completion server base URL");
  run->add_option("--model", rf.model, "Model name sent to the endpoint");
  run->add_option("--arch-spec", rf.arch_spec, "Architecture spec JSON overriding the shipped prompts");
  run->add_option("--parallelism", rf.parallelism, "Samples in flight");
  run->add_option("--seed", rf.seed, "Seed recorded in the run id");
  run->add_option("--temperature", rf.temperature);
  run->add_option("--top-p", rf.top_p);
  run->add_option("--max-tokens", rf.max_tokens);
  run->add_option("--logprob-k", rf.logprob_k);
  run->add_option("--virtual-start-ms", rf.virtual_start, "Virtual clock origin for mock runs");

  std::string traces, base_traces, group = "mas", out;
  auto* feat = app.add_subcommand("features", "Extract a feature matrix from a trace file");
  feat->add_option("--traces", traces, "Trace file")->required();
  feat->add_option("--base-traces", base_traces, "Single-agent R=1 trace file for base features");
  feat->add_option("--group", group, "mas | base-h | base-full");
  feat->add_option("--out", out, "Feature CSV")->required();

  std::vector<std::string> matrices;
  int folds = 5;
  std::uint64_t seed = 0;
  std::string model;
  auto* train = app.add_subcommand("train", "Cross-validate and fit the ensemble judger");
  train->add_option("--matrix", matrices, "Feature CSV (repeatable)")->required();
  train->add_option("--folds", folds);
  train->add_option("--seed", seed);
  train->add_option("--out,--model", model, "Model JSON; the CV report goes to <model>.cv.json")->required();

  std::vector<std::string> candidates;
  std::string judge_model, judge_out;
  auto* judge = app.add_subcommand("judge", "Pick one candidate per problem without labels");
  judge->add_option("--model", judge_model)->required();
  judge->add_option("--candidates", candidates, "Candidate feature CSVs")->required();
  judge->add_option("--out", judge_out, "Selection JSON")->required();

  std::string kind, matrix, report_out;
  int bins = 10;
  auto* report = app.add_subcommand("report", "Calibration, causal or quadrant report");
  report->add_option("kind", kind, "calibration | causal | quadrants")->required();
  report->add_option("--matrix", matrix, "Feature CSV (calibration)");
  report->add_option("--traces", traces, "MAS trace file (causal, quadrants)");
  report->add_option("--base-traces", base_traces, "Single-agent R=1 trace file");
  report->add_option("--bins", bins);
  report->add_option("--out", report_out, "Report JSON; the table goes to <out>.csv")->required();

  std::string validate_traces;
  auto* validate = app.add_subcommand("validate", "Lint a trace file");
  validate->add_option("--traces", validate_traces)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto result = masuq::cmd_run(resolve(rf), std::cerr);
      std::cout << result.trace_path.string() << "\n";
      return result.exit_code();
    }
    if (*feat) {
      std::optional<masuq::fs::path> base;
      if (!base_traces.empty()) base = base_traces;
      const auto m = masuq::cmd_features(traces, base, masuq::parse_feature_group(group), out, std::cerr);
      std::cout << m.rows.size() << " x " << m.dimension() << " -> " << out << "\n";
      return 0;
    }
    if (*train) {
      if (folds < 2) throw masuq::Error(masuq::Errc::ConfigError, "folds must be >= 2");
      std::vector<masuq::fs::path> paths(matrices.begin(), matrices.end());
      const auto r = masuq::cmd_train(paths, folds, seed, model);
      std::cout << "cv accuracy " << r.cv.mean_accuracy << " +/- " << r.cv.std_accuracy << "\n";
      return 0;
    }
    if (*judge) {
      std::vector<masuq::fs::path> paths(candidates.begin(), candidates.end());
      const auto r = masuq::cmd_judge(judge_model, paths, judge_out);
      std::cout << r["problems"].get<std::size_t>() << " selections -> " << judge_out << "\n";
      return 0;
    }
    if (*report) {
      if (bins < 1) throw masuq::Error(masuq::Errc::ConfigError, "bins must be >= 1");
      masuq::ReportInputs in;
      in.bins = bins;
      if (!matrix.empty()) in.matrix = matrix;
      if (!traces.empty()) in.traces = traces;
      if (!base_traces.empty()) in.base_traces = base_traces;
      masuq::cmd_report(masuq::parse_report_kind(kind), in, report_out);
      std::cout << report_out << "\n";
      return 0;
    }
    if (*validate) {
      const auto n = masuq::cmd_validate(validate_traces, std::cout);
      if (n == 0) std::cout << "ok\n";
      return n == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
