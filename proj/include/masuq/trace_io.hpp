#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "masuq/trace.hpp"

namespace masuq {

using Json = nlohmann::json;

// One JSON object per line. Record kinds: "manifest" (first line),
// "trajectory", "sample_summary".
Json to_json(const TokenRecord& token);
Json to_json(const Trajectory& traj, const std::string& run_id, const std::string& problem_id);
Json to_json(const RunManifest& manifest);
Json summary_json(const SampleTrace& trace);

TokenRecord token_from_json(const Json& j);
Trajectory trajectory_from_json(const Json& j);
RunManifest manifest_from_json(const Json& j);

/// Full encode of a sample: its trajectory lines followed by its summary line.
std::vector<std::string> encode_sample(const SampleTrace& trace);
std::string encode_manifest(const RunManifest& manifest);

struct TraceFile {
  RunManifest manifest;
  std::vector<SampleTrace> samples;  // one per sample_summary, file order
  // Trajectories with no matching summary (failed samples).
  std::vector<std::pair<std::string, Trajectory>> orphans;
};

/// Parses a trace file. Schema violations raise Errc::SchemaError naming the
/// line number.
TraceFile read_trace_file(const std::filesystem::path& path);
TraceFile parse_trace_lines(std::istream& in, const std::string& source_name);

/// Dataset lines: {id, question, answer, task_kind[, verdict]}.
std::vector<Problem> read_dataset(const std::filesystem::path& path);

/// Single-writer append-only line sink; safe to call from several threads.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void write_line(const std::string& line);
  void write_sample(const SampleTrace& trace);
  void write_partial(const std::string& run_id, const std::string& problem_id,
                     const std::vector<Trajectory>& trajectories);
  void flush();

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace masuq
