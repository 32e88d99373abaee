#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "masuq/config.hpp"
#include "masuq/features.hpp"
#include "masuq/judger.hpp"
#include "masuq/trace_io.hpp"

namespace masuq {

namespace fs = std::filesystem;

/// "YYYYMMDDTHHMMSSZ" for a UTC millisecond timestamp.
std::string format_run_timestamp(std::int64_t utc_ms);
/// 8 hex digits of FNV-1a-64 over (seed, architecture, rounds, dataset).
std::string seed_digest(std::uint64_t seed, Architecture arch, int rounds, const std::string& dataset);
std::string make_run_id(std::int64_t utc_ms, std::uint64_t seed, Architecture arch, int rounds,
                        const std::string& dataset);

struct RunResult {
  std::string run_id;
  fs::path trace_path;
  std::size_t succeeded = 0;
  std::vector<std::string> failures;  // one message per failed sample

  int exit_code() const { return failures.empty() ? 0 : 2; }
};

/// Runs every dataset problem and writes <out_dir>/<run_id>/trace.jsonl.
/// Failed samples keep their finished trajectories and are listed on err.
RunResult cmd_run(const CliConfig& config, std::ostream& err);

FeatureMatrix cmd_features(const fs::path& traces, const std::optional<fs::path>& base_traces,
                           FeatureGroup group, const fs::path& out, std::ostream& err);

struct TrainResult {
  EnsembleModel model;
  CvResult cv;
  Json report;
};

/// Concatenates the matrices, cross-validates, fits on all rows, and writes
/// the model to `model_out` and the CV report to `<model_out>.cv.json`.
TrainResult cmd_train(const std::vector<fs::path>& matrices, int folds, std::uint64_t seed,
                      const fs::path& model_out);

/// Label-free selection across candidate matrices paired by problem_id.
Json cmd_judge(const fs::path& model, const std::vector<fs::path>& candidates, const fs::path& out);

enum class ReportKind { calibration, causal, quadrants };
ReportKind parse_report_kind(std::string_view text);

struct ReportInputs {
  std::optional<fs::path> matrix;       // calibration
  std::optional<fs::path> traces;       // causal, quadrants
  std::optional<fs::path> base_traces;  // causal, quadrants
  int bins = 10;
};

/// Writes the JSON report to `out` and its table to `<out>.csv`.
Json cmd_report(ReportKind kind, const ReportInputs& inputs, const fs::path& out);

/// Lints a trace file; prints one line per problem and returns their count.
std::size_t cmd_validate(const fs::path& traces, std::ostream& out);

/// Mean per-token entropy over one round's trajectories (0 when empty).
double round_mean_token_entropy(const SampleTrace& trace, int round);

}  // namespace masuq
