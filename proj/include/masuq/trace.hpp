#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace masuq {

enum class TaskKind { math, multiple_choice, freeform };
enum class Architecture { single, sequential, centralized, debate, hybrid };

std::string_view to_string(TaskKind kind);
std::string_view to_string(Architecture arch);
TaskKind parse_task_kind(std::string_view text);
Architecture parse_architecture(std::string_view text);

inline constexpr Architecture kAllArchitectures[] = {
    Architecture::single, Architecture::sequential, Architecture::centralized,
    Architecture::debate, Architecture::hybrid};

/// LLM calls per round for each architecture (workers plus orchestrator).
int calls_per_round(Architecture arch);
inline int expected_trajectory_count(Architecture arch, int rounds) {
  return calls_per_round(arch) * rounds;
}

struct Problem {
  std::string id;
  std::string question;
  std::string gold_answer;
  TaskKind task_kind = TaskKind::math;
  // Pre-graded verdict for tasks the built-in verifier cannot grade.
  std::optional<bool> external_verdict;
};

using TopLogprobs = std::vector<std::pair<std::string, double>>;

struct TokenRecord {
  std::string token_text;
  double entropy = 0;  // nats
  std::optional<TopLogprobs> top_logprobs;
  std::optional<int> truncation_k;

  bool operator==(const TokenRecord&) const = default;
};

struct Trajectory {
  std::string agent_name;
  int agent_index = 0;
  int round = 1;
  std::vector<TokenRecord> tokens;
  std::string text;
  std::int64_t duration_ms = 0;
  std::int64_t prompt_chars = 0;

  double total_entropy() const;
  std::vector<double> token_entropies() const;

  bool operator==(const Trajectory&) const = default;
};

struct SampleTrace {
  std::string run_id;
  std::string problem_id;
  Architecture architecture = Architecture::single;
  int rounds = 1;
  std::vector<Trajectory> trajectories;
  std::string final_text;
  std::optional<std::string> extracted_answer;
  bool is_finally_correct = false;
  std::int64_t started_at = 0;   // UTC ms since epoch
  std::int64_t finished_at = 0;  // UTC ms since epoch

  bool operator==(const SampleTrace&) const = default;
};

struct SamplingParams {
  double temperature = 0.6;
  double top_p = 0.95;
  int max_tokens = 8192;
  int logprob_k = 20;

  bool operator==(const SamplingParams&) const = default;
};

struct RunManifest {
  std::string run_id;
  std::string model_endpoint;  // base URL + model name, or "mock:<path>"
  SamplingParams sampling;
  Architecture architecture = Architecture::single;
  int rounds = 1;
  std::string dataset_path;
  std::string feature_manifest_version;
  std::int64_t started_at = 0;
  std::int64_t wall_clock_ms = 0;

  bool operator==(const RunManifest&) const = default;
};

/// Checks every type invariant; returns one description per violation,
/// each naming the field and the rule. Empty means valid.
std::vector<std::string> validate_trace(const SampleTrace& trace);

}  // namespace masuq
