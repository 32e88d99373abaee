#include "masuq/trace.hpp"

#include <numeric>

#include "masuq/error.hpp"

namespace masuq {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::math: return "math";
    case TaskKind::multiple_choice: return "multiple_choice";
    case TaskKind::freeform: return "freeform";
  }
  return "math";
}

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::single: return "single";
    case Architecture::sequential: return "sequential";
    case Architecture::centralized: return "centralized";
    case Architecture::debate: return "debate";
    case Architecture::hybrid: return "hybrid";
  }
  return "single";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "math") return TaskKind::math;
  if (text == "multiple_choice" || text == "mcq") return TaskKind::multiple_choice;
  if (text == "freeform") return TaskKind::freeform;
  throw Error(Errc::SchemaError, "unknown task_kind '" + std::string(text) + "'");
}

Architecture parse_architecture(std::string_view text) {
  for (Architecture a : kAllArchitectures) {
    if (to_string(a) == text) return a;
  }
  throw Error(Errc::SchemaError, "unknown architecture '" + std::string(text) + "'");
}

int calls_per_round(Architecture arch) {
  switch (arch) {
    case Architecture::single: return 1;
    case Architecture::sequential: return 4;
    case Architecture::centralized: return 4;
    case Architecture::debate: return 3;
    case Architecture::hybrid: return 4;
  }
  return 1;
}

double Trajectory::total_entropy() const {
  double total = 0;
  for (const auto& t : tokens) total += t.entropy;
  return total;
}

std::vector<double> Trajectory::token_entropies() const {
  std::vector<double> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.entropy);
  return out;
}

std::vector<std::string> validate_trace(const SampleTrace& trace) {
  std::vector<std::string> v;
  if (trace.run_id.empty()) v.emplace_back("run_id: must be non-empty");
  if (trace.problem_id.empty()) v.emplace_back("problem_id: must be non-empty");
  if (trace.rounds < 1) v.emplace_back("rounds: must be >= 1");

  const int expected = expected_trajectory_count(trace.architecture, trace.rounds);
  if (static_cast<int>(trace.trajectories.size()) != expected) {
    v.push_back("trajectories: trajectory count mismatch (expected " + std::to_string(expected) +
                " for " + std::string(to_string(trace.architecture)) + " R=" +
                std::to_string(trace.rounds) + ", got " +
                std::to_string(trace.trajectories.size()) + ")");
  }

  for (std::size_t i = 0; i < trace.trajectories.size(); ++i) {
    const Trajectory& t = trace.trajectories[i];
    const std::string where = "trajectories[" + std::to_string(i) + "]";
    if (t.round < 1 || t.round > trace.rounds) {
      v.push_back(where + ".round: must lie in [1, " + std::to_string(trace.rounds) + "]");
    }
    if (t.agent_index < 0) v.push_back(where + ".agent_index: must be >= 0");
    if (t.duration_ms < 0) v.push_back(where + ".duration_ms: must be >= 0");
    if (t.prompt_chars < 0) v.push_back(where + ".prompt_chars: must be >= 0");
    if (i > 0) {
      const Trajectory& prev = trace.trajectories[i - 1];
      if (std::pair(prev.round, prev.agent_index) >= std::pair(t.round, t.agent_index)) {
        v.push_back(where + ": trajectories must be ordered by (round, execution order)");
      }
    }
    std::string concat;
    for (std::size_t k = 0; k < t.tokens.size(); ++k) {
      const TokenRecord& tok = t.tokens[k];
      concat += tok.token_text;
      const std::string tw = where + ".tokens[" + std::to_string(k) + "]";
      if (!(tok.entropy >= 0)) v.push_back(tw + ".entropy: entropy >= 0 violated");
      if (tok.truncation_k && *tok.truncation_k < 1) {
        v.push_back(tw + ".truncation_k: must be positive");
      }
      if (tok.top_logprobs) {
        const auto& lps = *tok.top_logprobs;
        for (std::size_t j = 0; j < lps.size(); ++j) {
          if (!(lps[j].second <= 0)) {
            v.push_back(tw + ".top_logprobs: logprob must be <= 0");
            break;
          }
          if (j > 0 && !(lps[j - 1].second > lps[j].second)) {
            v.push_back(tw + ".top_logprobs: logprobs must be strictly descending");
            break;
          }
        }
      }
    }
    if (concat != t.text) {
      v.push_back(where + ".text: must equal the concatenation of token_text");
    }
  }
  if (trace.finished_at < trace.started_at) {
    v.emplace_back("finished_at: must not precede started_at");
  }
  return v;
}

}  // namespace masuq
