#include "masuq/feature_manifest.hpp"

#include "masuq/error.hpp"

namespace masuq {
namespace {

constexpr const char* kAggregators[] = {"max", "mean", "min", "std", "variance", "median", "q1", "q3"};
constexpr const char* kAgentStats[] = {"total", "mean", "max", "min", "std", "variance", "median", "q1", "q3"};
constexpr const char* kStats[] = {"total", "mean", "max", "min", "std", "variance", "median", "q1", "q3"};

class Builder {
 public:
  explicit Builder(FeatureManifest& m) : m_(m) {}
  Builder& cat(FeatureCategory c) {
    cat_ = c;
    return *this;
  }
  void add(std::string name, std::string gen, bool identifier = false) {
    m_.entries.push_back({std::move(name), cat_, std::move(gen), identifier});
  }

 private:
  FeatureManifest& m_;
  FeatureCategory cat_ = FeatureCategory::agent_level;
};

}  // namespace

std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::agent_level: return "agent_level";
    case FeatureCategory::round_level: return "round_level";
    case FeatureCategory::sample_level: return "sample_level";
    case FeatureCategory::system_level: return "system_level";
    case FeatureCategory::base_entropy: return "base_entropy";
    case FeatureCategory::computational: return "computational";
    case FeatureCategory::base_correctness: return "base_correctness";
  }
  return "agent_level";
}

std::string_view to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::mas_only: return "mas";
    case FeatureGroup::base_h: return "base-h";
    case FeatureGroup::base_full: return "base-full";
  }
  return "mas";
}

FeatureGroup parse_feature_group(std::string_view text) {
  if (text == "mas" || text == "mas_only") return FeatureGroup::mas_only;
  if (text == "base-h" || text == "base_h") return FeatureGroup::base_h;
  if (text == "base-full" || text == "base_full") return FeatureGroup::base_full;
  throw Error(Errc::ConfigError, "unknown feature group '" + std::string(text) + "'");
}

std::string manifest_version(int rounds) { return "mas-entropy-v1-R" + std::to_string(rounds); }

FeatureManifest manifest_for_rounds(int R) {
  if (R < 1 || R > 5) throw Error(Errc::ManifestMismatch, "manifest supports 1..5 rounds");
  FeatureManifest m;
  m.version = manifest_version(R);
  m.rounds = R;
  Builder b(m);
  const auto rs = [](int r) { return std::to_string(r); };

  b.cat(FeatureCategory::agent_level);
  for (int r = 1; r <= R; ++r) {
    for (const char* agg : kAggregators) {
      for (const char* stat : kAgentStats) {
        b.add("sample_round_" + rs(r) + "_" + agg + "_agent_" + stat + "_entropy",
              std::string("agg(") + agg + ")/agent_stat(" + stat + ")/round(" + rs(r) + ")");
      }
    }
    b.add("sample_round_" + rs(r) + "_agent_entropy_divergence_variance", "divergence(variance)/round(" + rs(r) + ")");
    b.add("sample_round_" + rs(r) + "_agent_entropy_divergence_cv", "divergence(cv)/round(" + rs(r) + ")");
    for (const char* agg : {"max", "mean", "min", "std"}) {
      b.add("sample_round_" + rs(r) + "_" + agg + "_agent_token_count",
            std::string("agg(") + agg + ")/agent_token_count/round(" + rs(r) + ")");
    }
  }

  b.cat(FeatureCategory::round_level);
  for (int r = 1; r <= R; ++r) {
    const std::string p = "round_" + rs(r) + "_";
    b.add(p + "total_entropy", "round_sum(entropy)");
    b.add(p + "token_count", "round_sum(tokens)");
    b.add(p + "mean_token_entropy", "round_mean(token_entropy)");
    b.add(p + "avg_agent_total_entropy", "round_mean(agent_total)");
    b.add(p + "max_token_entropy", "round_max(token_entropy)");
    b.add(p + "std_token_entropy", "round_std(token_entropy)");
  }
  for (int r = 1; r < R; ++r) {
    const std::string p = "round_" + rs(r) + "_" + rs(r + 1) + "_";
    b.add(p + "change_entropy", "diff(round_total)");
    b.add(p + "ratio_entropy", "ratio(round_total)");
    b.add(p + "change_token_count", "diff(round_tokens)");
    b.add(p + "change_mean_entropy", "diff(round_mean)");
  }
  b.add("round_first_last_change_entropy", "first_last_diff(round_total)");
  b.add("round_first_last_ratio_entropy", "first_last_ratio(round_total)");
  b.add("round_entropy_slope", "ls_slope(round_total)");
  b.add("round_entropy_volatility", "pop_std(round_total)");
  b.add("round_mean_entropy_slope", "ls_slope(round_mean)");
  b.add("round_mean_entropy_volatility", "pop_std(round_mean)");
  b.add("round_token_count_slope", "ls_slope(round_tokens)");
  b.add("round_first_last_change_token_count", "first_last_diff(round_tokens)");
  b.add("round_first_last_ratio_token_count", "first_last_ratio(round_tokens)");
  b.add("round_first_last_change_mean_entropy", "first_last_diff(round_mean)");
  b.add("round_first_last_ratio_mean_entropy", "first_last_ratio(round_mean)");

  b.cat(FeatureCategory::sample_level);
  b.add("sample_total_entropy", "sum(trajectory_total)");
  b.add("sample_mean_trajectory_entropy", "mean(trajectory_total)");
  for (const char* s : {"max", "min", "std", "variance", "median", "q1", "q3"}) {
    b.add(std::string("sample_") + s + "_trajectory_entropy", std::string(s) + "(trajectory_total)");
  }
  for (const char* s : {"range", "iqr", "bowley_skewness", "cv", "tail_weight", "stability_index"}) {
    b.add(std::string("sample_entropy_") + s, std::string("shape(") + s + ")/trajectory_total");
  }
  b.add("sample_mean_entropy", "mean(token_entropy)");
  b.add("sample_max_token_entropy", "max(token_entropy)");
  b.add("sample_std_token_entropy", "std(token_entropy)");
  b.add("sample_median_token_entropy", "median(token_entropy)");
  for (const char* s : kStats) {
    b.add(std::string("sample_") + s + "_answer_token_entropy", std::string(s) + "(answer_span)");
  }
  b.add("answer_format_ok", "indicator(answer_span)");

  b.cat(FeatureCategory::system_level);
  for (const char* id : {"run_id", "problem_id", "architecture", "dataset", "model_tag"}) {
    b.add(id, "identifier", true);
  }
  b.add("system_architecture_code", "code(centralized=0,debate=1,hybrid=2,sequential=3,single=4)");
  b.add("system_num_agents", "count(agents)");
  b.add("system_total_inference_count", "count(trajectories)");
  b.add("system_experiment_total_entropy", "sum(token_entropy)");
  b.add("system_avg_entropy_per_inference", "sum(token_entropy)/count(trajectories)");

  b.cat(FeatureCategory::computational);
  for (const char* id : {"task_kind", "started_at", "finished_at", "extracted_answer"}) {
    b.add(id, "identifier", true);
  }
  b.add("total_reasoning_time_ms", "sum(duration_ms)");
  for (int r = 1; r <= R; ++r) b.add("round_" + rs(r) + "_time_ms", "round_sum(duration_ms)");
  b.add("total_token_count", "count(tokens)");
  b.add("mean_agent_token_count", "count(tokens)/count(trajectories)");
  b.add("answer_token_count", "count(answer_span)");
  b.add("mean_inference_time_ms", "sum(duration_ms)/count(trajectories)");

  b.cat(FeatureCategory::base_entropy);
  b.add("base_sample_total_entropy", "base:sum(token_entropy)");
  b.add("base_sample_token_count", "base:count(tokens)");
  b.add("base_sample_mean_entropy", "base:mean(token_entropy)");
  b.add("base_sample_max_entropy", "base:max(token_entropy)");
  b.add("base_sample_min_entropy", "base:min(token_entropy)");
  b.add("base_sample_std_entropy", "base:std(token_entropy)");
  b.add("base_sample_median_entropy", "base:median(token_entropy)");
  b.add("base_model_answer_token_count", "base:count(answer_span)");
  b.add("base_model_mean_answer_token_entropy", "base:mean(answer_span)");
  b.add("base_model_max_answer_token_entropy", "base:max(answer_span)");
  b.add("sample_entropy_ratio_vs_base_total", "ratio(mas_total, base_total)");
  b.add("sample_entropy_reduction_vs_base_total", "diff(base_total, mas_total)");
  b.add("sample_mean_entropy_ratio_vs_base", "ratio(mas_mean, base_mean)");
  b.add("sample_mean_entropy_reduction_vs_base", "diff(base_mean, mas_mean)");
  b.add("answer_entropy_shift_vs_base", "diff(base_answer_mean, mas_answer_mean)");
  b.add("answer_entropy_ratio_vs_base", "ratio(mas_answer_mean, base_answer_mean)");
  b.add("token_count_ratio_vs_base", "ratio(mas_tokens, base_tokens)");

  b.cat(FeatureCategory::base_correctness);
  b.add("base_model_is_correct", "base:label");
  b.add("base_model_format_ok", "base:indicator(answer)");
  b.add("base_model_agrees_with_mas", "equal(base_answer, mas_answer)");
  b.add("base_model_answer_is_numeric", "base:numeric(answer)");
  return m;
}

std::vector<std::size_t> FeatureManifest::selection(FeatureGroup group) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.identifier) continue;
    if (e.category == FeatureCategory::base_entropy && group == FeatureGroup::mas_only) continue;
    if (e.category == FeatureCategory::base_correctness && group != FeatureGroup::base_full) continue;
    out.push_back(i);
  }
  return out;
}

std::vector<std::string> FeatureManifest::names(FeatureGroup group) const {
  std::vector<std::string> out;
  for (auto i : selection(group)) out.push_back(entries[i].name);
  return out;
}

std::size_t FeatureManifest::count(FeatureCategory c) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.category == c;
  return n;
}

std::size_t FeatureManifest::identifier_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.identifier;
  return n;
}

std::size_t FeatureManifest::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name == name) return i;
  }
  return static_cast<std::size_t>(-1);
}

nlohmann::json FeatureManifest::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) {
    arr.push_back({{"name", e.name},
                   {"group", e.identifier ? std::string("identifier") : std::string(to_string(e.category))},
                   {"category", std::string(to_string(e.category))},
                   {"generator", e.generator}});
  }
  return {{"version", version}, {"rounds", rounds}, {"entries", std::move(arr)}};
}

}  // namespace masuq
