#include "masuq/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "masuq/entropy_stats.hpp"
#include "masuq/error.hpp"
#include "masuq/topology.hpp"
#include "masuq/verifier.hpp"

namespace masuq {
namespace {

using Values = std::unordered_map<std::string, double>;

double safe_ratio(double num, double den) { return std::abs(den) < kDegenerateEps ? 0.0 : num / den; }

double stat_field(const StatSummary& s, std::string_view name) {
  if (name == "total") return s.total;
  if (name == "mean") return s.mean;
  if (name == "max") return s.max;
  if (name == "min") return s.min;
  if (name == "std") return s.std;
  if (name == "variance") return s.variance;
  if (name == "median") return s.median;
  if (name == "q1") return s.q1;
  if (name == "q3") return s.q3;
  throw Error(Errc::SchemaError, "unknown statistic " + std::string(name));
}

constexpr const char* kStatNames[] = {"total", "mean", "max", "min", "std", "variance", "median", "q1", "q3"};
constexpr const char* kAggNames[] = {"max", "mean", "min", "std", "variance", "median", "q1", "q3"};

// Least-squares slope of ys against x = 1..n; 0 for fewer than two points.
double ls_slope(const std::vector<double>& ys) {
  const std::size_t n = ys.size();
  if (n < 2) return 0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += static_cast<double>(i + 1);
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i + 1) - mx;
    sxy += dx * (ys[i] - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

int architecture_code(Architecture a) {
  switch (a) {
    case Architecture::centralized: return 0;
    case Architecture::debate: return 1;
    case Architecture::hybrid: return 2;
    case Architecture::sequential: return 3;
    case Architecture::single: return 4;
  }
  return 4;
}

// Token entropies inside the final answer's boxed span; empty when absent.
std::optional<std::vector<double>> answer_entropies(const SampleTrace& trace) {
  const auto idx = final_trajectory_index(trace);
  if (!idx) return std::nullopt;
  const Trajectory& t = trace.trajectories[*idx];
  const auto ans = extract_boxed(t.text, t.tokens);
  if (!ans || !ans->answer_token_span) return std::nullopt;
  std::vector<double> out;
  for (std::size_t k = ans->answer_token_span->begin; k < ans->answer_token_span->end; ++k) {
    out.push_back(t.tokens[k].entropy);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::vector<double> all_token_entropies(const SampleTrace& trace) {
  std::vector<double> out;
  for (const auto& t : trace.trajectories) {
    for (const auto& tok : t.tokens) out.push_back(tok.entropy);
  }
  return out;
}

void mas_features(const SampleTrace& trace, int R, Values& v) {
  const auto rs = [](int r) { return std::to_string(r); };
  std::vector<double> round_total(R, 0), round_tokens(R, 0), round_mean(R, 0), round_time(R, 0);

  for (int r = 1; r <= R; ++r) {
    std::vector<const Trajectory*> ts;
    for (const auto& t : trace.trajectories) {
      if (t.round == r) ts.push_back(&t);
    }
    // Per-agent summaries, then cross-agent aggregation of each statistic.
    std::vector<StatSummary> per_agent;
    std::vector<double> totals, counts, tokens;
    for (const auto* t : ts) {
      const auto e = t->token_entropies();
      per_agent.push_back(describe(e));
      totals.push_back(per_agent.back().total);
      counts.push_back(static_cast<double>(e.size()));
      tokens.insert(tokens.end(), e.begin(), e.end());
      round_time[r - 1] += static_cast<double>(t->duration_ms);
    }
    for (const char* stat : kStatNames) {
      std::vector<double> col;
      for (const auto& s : per_agent) col.push_back(stat_field(s, stat));
      const StatSummary agg = describe(col);
      for (const char* a : kAggNames) {
        v["sample_round_" + rs(r) + "_" + a + "_agent_" + stat + "_entropy"] = stat_field(agg, a);
      }
    }
    const StatSummary tot = describe(totals);
    v["sample_round_" + rs(r) + "_agent_entropy_divergence_variance"] = tot.variance;
    v["sample_round_" + rs(r) + "_agent_entropy_divergence_cv"] = safe_ratio(tot.std, tot.mean);
    const StatSummary cnt = describe(counts);
    v["sample_round_" + rs(r) + "_max_agent_token_count"] = cnt.max;
    v["sample_round_" + rs(r) + "_mean_agent_token_count"] = cnt.mean;
    v["sample_round_" + rs(r) + "_min_agent_token_count"] = cnt.min;
    v["sample_round_" + rs(r) + "_std_agent_token_count"] = cnt.std;

    const StatSummary tk = describe(tokens);
    round_total[r - 1] = tk.total;
    round_tokens[r - 1] = static_cast<double>(tk.count);
    round_mean[r - 1] = tk.mean;
    const std::string p = "round_" + rs(r) + "_";
    v[p + "total_entropy"] = tk.total;
    v[p + "token_count"] = static_cast<double>(tk.count);
    v[p + "mean_token_entropy"] = tk.mean;
    v[p + "avg_agent_total_entropy"] = tot.mean;
    v[p + "max_token_entropy"] = tk.max;
    v[p + "std_token_entropy"] = tk.std;
    v[p + "time_ms"] = round_time[r - 1];
  }
  for (int r = 1; r < R; ++r) {
    const std::string p = "round_" + rs(r) + "_" + rs(r + 1) + "_";
    v[p + "change_entropy"] = round_total[r] - round_total[r - 1];
    v[p + "ratio_entropy"] = safe_ratio(round_total[r], round_total[r - 1]);
    v[p + "change_token_count"] = round_tokens[r] - round_tokens[r - 1];
    v[p + "change_mean_entropy"] = round_mean[r] - round_mean[r - 1];
  }
  v["round_first_last_change_entropy"] = round_total.back() - round_total.front();
  v["round_first_last_ratio_entropy"] = safe_ratio(round_total.back(), round_total.front());
  v["round_entropy_slope"] = ls_slope(round_total);
  v["round_entropy_volatility"] = describe(round_total).std;
  v["round_mean_entropy_slope"] = ls_slope(round_mean);
  v["round_mean_entropy_volatility"] = describe(round_mean).std;
  v["round_token_count_slope"] = ls_slope(round_tokens);
  v["round_first_last_change_token_count"] = round_tokens.back() - round_tokens.front();
  v["round_first_last_ratio_token_count"] = safe_ratio(round_tokens.back(), round_tokens.front());
  v["round_first_last_change_mean_entropy"] = round_mean.back() - round_mean.front();
  v["round_first_last_ratio_mean_entropy"] = safe_ratio(round_mean.back(), round_mean.front());

  std::vector<double> traj_totals;
  double total_time = 0;
  for (const auto& t : trace.trajectories) {
    traj_totals.push_back(t.total_entropy());
    total_time += static_cast<double>(t.duration_ms);
  }
  const StatSummary ts = describe(traj_totals);
  v["sample_total_entropy"] = ts.total;
  v["sample_mean_trajectory_entropy"] = ts.mean;
  for (const char* s : {"max", "min", "std", "variance", "median", "q1", "q3"}) {
    v[std::string("sample_") + s + "_trajectory_entropy"] = stat_field(ts, s);
  }
  const ShapeMetrics sh = ts.count ? shape(ts) : ShapeMetrics{};
  v["sample_entropy_range"] = sh.range;
  v["sample_entropy_iqr"] = sh.iqr;
  v["sample_entropy_bowley_skewness"] = sh.bowley_skewness;
  v["sample_entropy_cv"] = sh.cv;
  v["sample_entropy_tail_weight"] = sh.tail_weight;
  v["sample_entropy_stability_index"] = sh.stability_index;

  const StatSummary tok = describe(all_token_entropies(trace));
  v["sample_mean_entropy"] = tok.mean;
  v["sample_max_token_entropy"] = tok.max;
  v["sample_std_token_entropy"] = tok.std;
  v["sample_median_token_entropy"] = tok.median;

  const auto ans = answer_entropies(trace);
  const StatSummary as = ans ? describe(*ans) : StatSummary{};
  for (const char* s : kStatNames) v[std::string("sample_") + s + "_answer_token_entropy"] = stat_field(as, s);
  v["answer_format_ok"] = ans ? 1.0 : 0.0;

  std::vector<int> agents;
  for (const auto& t : trace.trajectories) agents.push_back(t.agent_index);
  std::sort(agents.begin(), agents.end());
  agents.erase(std::unique(agents.begin(), agents.end()), agents.end());
  const double n_traj = static_cast<double>(trace.trajectories.size());
  v["system_architecture_code"] = architecture_code(trace.architecture);
  v["system_num_agents"] = static_cast<double>(agents.size());
  v["system_total_inference_count"] = n_traj;
  v["system_experiment_total_entropy"] = tok.total;
  v["system_avg_entropy_per_inference"] = safe_ratio(tok.total, n_traj);

  v["total_reasoning_time_ms"] = total_time;
  v["total_token_count"] = static_cast<double>(tok.count);
  v["mean_agent_token_count"] = safe_ratio(static_cast<double>(tok.count), n_traj);
  v["answer_token_count"] = static_cast<double>(as.count);
  v["mean_inference_time_ms"] = safe_ratio(total_time, n_traj);
}

void base_features(const SampleTrace& mas, const SampleTrace& base, const Values& mv, Values& v) {
  const StatSummary b = describe(all_token_entropies(base));
  v["base_sample_total_entropy"] = b.total;
  v["base_sample_token_count"] = static_cast<double>(b.count);
  v["base_sample_mean_entropy"] = b.mean;
  v["base_sample_max_entropy"] = b.max;
  v["base_sample_min_entropy"] = b.min;
  v["base_sample_std_entropy"] = b.std;
  v["base_sample_median_entropy"] = b.median;
  const auto bans = answer_entropies(base);
  const StatSummary ba = bans ? describe(*bans) : StatSummary{};
  v["base_model_answer_token_count"] = static_cast<double>(ba.count);
  v["base_model_mean_answer_token_entropy"] = ba.mean;
  v["base_model_max_answer_token_entropy"] = ba.max;

  const double mas_total = mv.at("sample_total_entropy");
  const double mas_mean = mv.at("sample_mean_entropy");
  const double mas_answer = mv.at("sample_mean_answer_token_entropy");
  v["sample_entropy_ratio_vs_base_total"] = safe_ratio(mas_total, b.total);
  v["sample_entropy_reduction_vs_base_total"] = b.total - mas_total;
  v["sample_mean_entropy_ratio_vs_base"] = safe_ratio(mas_mean, b.mean);
  v["sample_mean_entropy_reduction_vs_base"] = b.mean - mas_mean;
  v["answer_entropy_shift_vs_base"] = ba.mean - mas_answer;
  v["answer_entropy_ratio_vs_base"] = safe_ratio(mas_answer, ba.mean);
  v["token_count_ratio_vs_base"] = safe_ratio(mv.at("total_token_count"), static_cast<double>(b.count));

  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  v["base_model_is_correct"] = base.is_finally_correct ? 1.0 : 0.0;
  v["base_model_format_ok"] = base.extracted_answer ? 1.0 : 0.0;
  v["base_model_agrees_with_mas"] =
      base.extracted_answer && mas.extracted_answer &&
              lower(*base.extracted_answer) == lower(*mas.extracted_answer)
          ? 1.0
          : 0.0;
  v["base_model_answer_is_numeric"] =
      base.extracted_answer && is_numeric_answer(*base.extracted_answer) ? 1.0 : 0.0;
}

void check_base(const SampleTrace& base) {
  if (base.architecture != Architecture::single || base.rounds != 1) {
    throw Error(Errc::ManifestMismatch, "base trace for " + base.problem_id +
                                            " must be single-agent with R=1");
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::vector<std::pair<std::string, double>> compute_features(const SampleTrace& trace,
                                                             const SampleTrace* base,
                                                             const FeatureManifest& manifest) {
  if (trace.rounds != manifest.rounds) {
    throw Error(Errc::ManifestMismatch, "trace " + trace.problem_id + " has R=" +
                                            std::to_string(trace.rounds) + ", manifest " +
                                            manifest.version);
  }
  Values v;
  mas_features(trace, manifest.rounds, v);
  if (base) {
    check_base(*base);
    base_features(trace, *base, v, v);
  }
  std::vector<std::pair<std::string, double>> out;
  for (const auto& e : manifest.entries) {
    if (e.identifier) continue;
    auto it = v.find(e.name);
    double x = 0;
    if (it != v.end()) {
      x = it->second;
    } else if (base || (e.category != FeatureCategory::base_entropy &&
                        e.category != FeatureCategory::base_correctness)) {
      throw Error(Errc::ManifestMismatch, "no generator produced " + e.name);
    }
    if (!std::isfinite(x)) throw Error(Errc::NonFiniteInput, e.name + " is not finite");
    out.emplace_back(e.name, x);
  }
  return out;
}

FeatureRow extract(const SampleTrace& trace, const SampleTrace* base,
                   const FeatureManifest& manifest, FeatureGroup group) {
  if (group != FeatureGroup::mas_only && base == nullptr) {
    throw Error(Errc::MissingBaseTrace, "group " + std::string(to_string(group)) +
                                            " needs a base trace for " + trace.problem_id);
  }
  const auto all = compute_features(trace, group == FeatureGroup::mas_only ? nullptr : base, manifest);
  std::unordered_map<std::string, double> by_name(all.begin(), all.end());
  FeatureRow row;
  row.run_id = trace.run_id;
  row.problem_id = trace.problem_id;
  row.label = trace.is_finally_correct ? 1 : 0;
  for (const auto& name : manifest.names(group)) row.values.push_back(by_name.at(name));
  return row;
}

FeatureMatrix extract_run(const TraceFile& traces, const TraceFile* base, FeatureGroup group) {
  const FeatureManifest manifest = manifest_for_rounds(traces.manifest.rounds);
  FeatureMatrix m;
  m.manifest_version = manifest.version;
  m.group = group;
  m.names = manifest.names(group);
  std::map<std::string, const SampleTrace*> base_by_problem;
  if (base) {
    for (const auto& s : base->samples) base_by_problem.emplace(s.problem_id, &s);
  }
  for (const auto& s : traces.samples) {
    const SampleTrace* b = nullptr;
    if (auto it = base_by_problem.find(s.problem_id); it != base_by_problem.end()) b = it->second;
    if (group != FeatureGroup::mas_only && b == nullptr) {
      m.unpaired.push_back("UnpairedSample: no base trace for problem " + s.problem_id);
      continue;
    }
    m.rows.push_back(extract(s, b, manifest, group));
  }
  return m;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& matrix) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  for (const auto& n : matrix.names) out << csv_field(n) << ',';
  out << "sample_key,label\n";
  for (const auto& row : matrix.rows) {
    for (double x : row.values) out << format_double(x) << ',';
    out << csv_field(row.sample_key()) << ',' << row.label << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());

  const nlohmann::json side{{"manifest_version", matrix.manifest_version},
                            {"group", std::string(to_string(matrix.group))},
                            {"dimension", matrix.names.size()},
                            {"rows", matrix.rows.size()}};
  std::ofstream sc(path.string() + ".manifest.json", std::ios::trunc | std::ios::binary);
  if (!sc) throw Error(Errc::IoError, "cannot write sidecar for " + path.string());
  sc << side.dump(2) << '\n';
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open feature matrix " + path.string());
  const std::string src = path.string();
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::SchemaError, src + ":1: missing header");
  auto header = split_csv(line);
  if (header.size() < 2 || header[header.size() - 2] != "sample_key" || header.back() != "label") {
    throw Error(Errc::SchemaError, src + ":1: header must end with sample_key,label");
  }
  FeatureMatrix m;
  m.names.assign(header.begin(), header.end() - 2);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    auto fail = [&](const std::string& msg) {
      throw Error(Errc::SchemaError, src + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (f.size() != header.size()) fail("expected " + std::to_string(header.size()) + " fields");
    FeatureRow row;
    for (std::size_t k = 0; k < m.names.size(); ++k) {
      double x = 0;
      const auto& s = f[k];
      const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("bad number '" + s + "'");
      row.values.push_back(x);
    }
    const std::string& key = f[f.size() - 2];
    const auto slash = key.find('/');
    if (slash == std::string::npos) fail("sample_key must be run_id/problem_id");
    row.run_id = key.substr(0, slash);
    row.problem_id = key.substr(slash + 1);
    if (f.back() != "0" && f.back() != "1") fail("label must be 0 or 1");
    row.label = f.back() == "1";
    m.rows.push_back(std::move(row));
  }
  const std::filesystem::path side = src + ".manifest.json";
  if (std::filesystem::exists(side)) {
    std::ifstream sc(side);
    try {
      const auto j = nlohmann::json::parse(sc);
      m.manifest_version = j.value("manifest_version", std::string());
      m.group = parse_feature_group(j.value("group", std::string("mas")));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::SchemaError, side.string() + ": " + e.what());
    }
  }
  return m;
}

}  // namespace masuq
