#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "masuq/error.hpp"
#include "masuq/llm_gateway.hpp"
#include "masuq/trace.hpp"

namespace masuq {

enum class DecisionRule { last_round_output, judger_output, orchestrator_output, majority_vote };
std::string_view to_string(DecisionRule rule);
DecisionRule parse_decision_rule(std::string_view text);

// Placeholders: {question}, {context_block}, {solutions_block}.
struct PromptTemplate {
  std::string system;
  std::string user;
  bool operator==(const PromptTemplate&) const = default;
};

struct AgentSpec {
  std::string name;
  PromptTemplate prompt;
  bool operator==(const AgentSpec&) const = default;
};

struct OrchestratorSpec {
  std::string name;
  PromptTemplate feedback;     // rounds r < R
  PromptTemplate aggregation;  // round R
  bool operator==(const OrchestratorSpec&) const = default;
};

struct ArchitectureSpec {
  Architecture kind = Architecture::single;
  std::vector<AgentSpec> roster;
  std::optional<OrchestratorSpec> orchestrator;
  DecisionRule decision = DecisionRule::last_round_output;

  /// Agent index of the orchestrator (one past the last worker).
  int orchestrator_index() const { return static_cast<int>(roster.size()); }
  int agents_per_round() const { return orchestrator_index() + (orchestrator ? 1 : 0); }
  const std::string& agent_name(int index) const;

  /// Throws Errc::ConfigError when the roster shape or rule does not fit kind.
  void validate() const;

  static ArchitectureSpec from_json(const nlohmann::json& j);
  static ArchitectureSpec load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Shipped defaults for math-style tasks.
ArchitectureSpec default_spec(Architecture kind);

struct ContextEntry {
  std::string source_agent;
  int source_index = 0;
  int source_round = 1;
  std::string text;
  bool operator==(const ContextEntry&) const = default;
};

struct ContextBundle {
  std::vector<ContextEntry> entries;  // ascending (round, execution index)
  bool operator==(const ContextBundle&) const = default;
};

/// Prior trajectories visible to agent `agent_index` at `round`.
/// Raises Errc::HistoryIncomplete when a required trajectory is absent.
ContextBundle build_context(const ArchitectureSpec& spec, int agent_index, int round,
                            std::span<const Trajectory> history);

struct RenderedPrompt {
  std::string system;
  std::string user;
};

struct RenderOptions {
  // Above this many user-prompt characters each entry keeps only its tail.
  std::size_t context_budget_chars = 32000;
  std::size_t truncated_entry_chars = 4000;
};

RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Problem& problem,
                             const ContextBundle& context, const RenderOptions& options = {});

struct RunOptions {
  std::string run_id = "run";
  // Set for scripted gateways: sample timestamps then advance by scripted
  // durations from this origin instead of reading the system clock.
  std::optional<std::int64_t> virtual_start_ms;
  // Centralized workers share no same-round context and may run concurrently.
  bool parallel_workers = false;
  RenderOptions render;
};

/// Raised when a gateway call fails mid-sample; keeps what finished.
class SampleFailure : public Error {
 public:
  SampleFailure(const std::string& what, std::vector<Trajectory> partial)
      : Error(Errc::GatewayFailure, what), partial_(std::move(partial)) {}
  const std::vector<Trajectory>& partial() const noexcept { return partial_; }

 private:
  std::vector<Trajectory> partial_;
};

SampleTrace run_sample(const Problem& problem, const ArchitectureSpec& spec, int rounds,
                       Gateway& gateway, const SamplingParams& sampling,
                       const RunOptions& options = {});

/// The trajectory whose text became final_text under the spec's decision rule.
std::optional<std::size_t> final_trajectory_index(const SampleTrace& trace);

std::int64_t now_utc_ms();

}  // namespace masuq
