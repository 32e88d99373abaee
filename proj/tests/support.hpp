#pragma once
// Shared fixtures for unit and acceptance tests. The feature oracle here is
// written from the feature definitions with plain loops and never calls the
// library's statistics helpers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "masuq/gbdt.hpp"
#include "masuq/trace.hpp"

namespace masuq::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("masuq_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Trajectory make_traj(std::string name, int index, int round, const std::vector<double>& entropies,
                            std::vector<std::string> texts = {}, std::int64_t duration = 10) {
  Trajectory t;
  t.agent_name = std::move(name);
  t.agent_index = index;
  t.round = round;
  t.duration_ms = duration;
  for (std::size_t i = 0; i < entropies.size(); ++i) {
    TokenRecord tok;
    tok.token_text = i < texts.size() ? texts[i] : "t";
    tok.entropy = entropies[i];
    t.text += tok.token_text;
    t.tokens.push_back(tok);
  }
  return t;
}

// Synthetic binary task: three informative columns, the rest standard normal.
// Column 0 is anti-aligned with the label (label rule 1[x0 < 0]).
struct SyntheticTask {
  Matrix X;
  std::vector<int> y;
};

inline SyntheticTask make_synthetic(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  SyntheticTask t;
  t.X = Matrix(n, d);
  t.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    t.y[i] = y;
    const double s = 2.0 * y - 1.0;
    for (std::size_t j = 0; j < d; ++j) t.X(i, j) = rng.normal();
    t.X(i, 0) = -s * (1.0 + 0.25 * std::abs(rng.normal()));
    t.X(i, 1) = s * (1.0 + 0.3 * std::abs(rng.normal()));
    t.X(i, 2) = s * (1.0 + 0.35 * std::abs(rng.normal()));
  }
  return t;
}

// ---- brute-force feature oracle ----------------------------------------

namespace oracle {

inline double sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}
inline double mean(const std::vector<double>& v) { return v.empty() ? 0 : sum(v) / static_cast<double>(v.size()); }
inline double var(const std::vector<double>& v) {
  if (v.empty()) return 0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}
inline double sd(const std::vector<double>& v) { return std::sqrt(var(v)); }
inline std::vector<double> sorted(std::vector<double> v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    for (std::size_t k = i; k > 0 && v[k - 1] > v[k]; --k) std::swap(v[k - 1], v[k]);
  }
  return v;
}
inline double quant(const std::vector<double>& v, double q) {
  if (v.empty()) return 0;
  const auto s = sorted(v);
  const double h = static_cast<double>(s.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] + (h - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
}
inline double vmax(const std::vector<double>& v) { return v.empty() ? 0 : sorted(v).back(); }
inline double vmin(const std::vector<double>& v) { return v.empty() ? 0 : sorted(v).front(); }
inline double ratio(double a, double b) { return std::abs(b) < 1e-12 ? 0 : a / b; }

inline double stat(const std::vector<double>& v, const std::string& s) {
  if (s == "total") return sum(v);
  if (s == "mean") return mean(v);
  if (s == "max") return vmax(v);
  if (s == "min") return vmin(v);
  if (s == "std") return sd(v);
  if (s == "variance") return var(v);
  if (s == "median") return quant(v, 0.5);
  if (s == "q1") return quant(v, 0.25);
  return quant(v, 0.75);  // q3
}

inline double slope(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  if (y.size() < 2) return 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = static_cast<double>(i + 1);
    sx += x;
    sy += y[i];
    sxx += x * x;
    sxy += x * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::vector<double> ents(const Trajectory& t) {
  std::vector<double> e;
  for (const auto& k : t.tokens) e.push_back(k.entropy);
  return e;
}

// Scripted traces put "\boxed{", the answer digits and "}" in their own tokens.
inline std::vector<double> answer_tokens(const Trajectory& t, bool& found) {
  found = false;
  std::vector<double> out;
  for (std::size_t i = t.tokens.size(); i-- > 0;) {
    if (t.tokens[i].token_text != "\\boxed{") continue;
    for (std::size_t k = i + 1; k < t.tokens.size() && t.tokens[k].token_text != "}"; ++k) {
      out.push_back(t.tokens[k].entropy);
    }
    found = !out.empty();
    return out;
  }
  return out;
}

inline const Trajectory* final_traj(const SampleTrace& s) {
  if (s.trajectories.empty()) return nullptr;
  if (s.architecture == Architecture::single) return &s.trajectories.back();
  if (s.architecture == Architecture::debate) {
    for (const auto& t : s.trajectories) {
      if (t.round == s.rounds && t.text == s.final_text) return &t;
    }
    return nullptr;
  }
  for (const auto& t : s.trajectories) {
    if (t.round == s.rounds && t.agent_index == 3) return &t;
  }
  return nullptr;
}

inline std::map<std::string, double> features(const SampleTrace& s, const SampleTrace* base) {
  std::map<std::string, double> f;
  const int R = s.rounds;
  const char* stats[] = {"total", "mean", "max", "min", "std", "variance", "median", "q1", "q3"};
  const char* aggs[] = {"max", "mean", "min", "std", "variance", "median", "q1", "q3"};
  std::vector<double> rt, rn, rm;
  for (int r = 1; r <= R; ++r) {
    const std::string p = "sample_round_" + std::to_string(r) + "_";
    std::vector<const Trajectory*> ts;
    for (const auto& t : s.trajectories) {
      if (t.round == r) ts.push_back(&t);
    }
    for (const char* st : stats) {
      std::vector<double> per;
      for (auto* t : ts) per.push_back(stat(ents(*t), st));
      for (const char* a : aggs) f[p + a + "_agent_" + st + "_entropy"] = stat(per, a);
    }
    std::vector<double> tot, cnt, all;
    double time = 0;
    for (auto* t : ts) {
      const auto e = ents(*t);
      tot.push_back(sum(e));
      cnt.push_back(static_cast<double>(e.size()));
      all.insert(all.end(), e.begin(), e.end());
      time += static_cast<double>(t->duration_ms);
    }
    f[p + "agent_entropy_divergence_variance"] = var(tot);
    f[p + "agent_entropy_divergence_cv"] = ratio(sd(tot), mean(tot));
    f[p + "max_agent_token_count"] = vmax(cnt);
    f[p + "mean_agent_token_count"] = mean(cnt);
    f[p + "min_agent_token_count"] = vmin(cnt);
    f[p + "std_agent_token_count"] = sd(cnt);
    const std::string q = "round_" + std::to_string(r) + "_";
    f[q + "total_entropy"] = sum(all);
    f[q + "token_count"] = static_cast<double>(all.size());
    f[q + "mean_token_entropy"] = mean(all);
    f[q + "avg_agent_total_entropy"] = mean(tot);
    f[q + "max_token_entropy"] = vmax(all);
    f[q + "std_token_entropy"] = sd(all);
    f[q + "time_ms"] = time;
    rt.push_back(sum(all));
    rn.push_back(static_cast<double>(all.size()));
    rm.push_back(mean(all));
  }
  for (int r = 1; r < R; ++r) {
    const std::string p = "round_" + std::to_string(r) + "_" + std::to_string(r + 1) + "_";
    f[p + "change_entropy"] = rt[r] - rt[r - 1];
    f[p + "ratio_entropy"] = ratio(rt[r], rt[r - 1]);
    f[p + "change_token_count"] = rn[r] - rn[r - 1];
    f[p + "change_mean_entropy"] = rm[r] - rm[r - 1];
  }
  f["round_first_last_change_entropy"] = rt.back() - rt.front();
  f["round_first_last_ratio_entropy"] = ratio(rt.back(), rt.front());
  f["round_entropy_slope"] = slope(rt);
  f["round_entropy_volatility"] = sd(rt);
  f["round_mean_entropy_slope"] = slope(rm);
  f["round_mean_entropy_volatility"] = sd(rm);
  f["round_token_count_slope"] = slope(rn);
  f["round_first_last_change_token_count"] = rn.back() - rn.front();
  f["round_first_last_ratio_token_count"] = ratio(rn.back(), rn.front());
  f["round_first_last_change_mean_entropy"] = rm.back() - rm.front();
  f["round_first_last_ratio_mean_entropy"] = ratio(rm.back(), rm.front());

  std::vector<double> traj, tokens;
  double time = 0;
  for (const auto& t : s.trajectories) {
    const auto e = ents(t);
    traj.push_back(sum(e));
    tokens.insert(tokens.end(), e.begin(), e.end());
    time += static_cast<double>(t.duration_ms);
  }
  f["sample_total_entropy"] = sum(traj);
  f["sample_mean_trajectory_entropy"] = mean(traj);
  for (const char* st : {"max", "min", "std", "variance", "median", "q1", "q3"}) {
    f[std::string("sample_") + st + "_trajectory_entropy"] = stat(traj, st);
  }
  const double iqr = quant(traj, 0.75) - quant(traj, 0.25);
  const double cv = ratio(sd(traj), mean(traj));
  f["sample_entropy_range"] = vmax(traj) - vmin(traj);
  f["sample_entropy_iqr"] = iqr;
  f["sample_entropy_bowley_skewness"] =
      iqr < 1e-12 ? 0 : (quant(traj, 0.75) + quant(traj, 0.25) - 2 * quant(traj, 0.5)) / iqr;
  f["sample_entropy_cv"] = cv;
  f["sample_entropy_tail_weight"] = iqr < 1e-12 ? 0 : (vmax(traj) - quant(traj, 0.75)) / iqr;
  f["sample_entropy_stability_index"] = 1 - cv;
  f["sample_mean_entropy"] = mean(tokens);
  f["sample_max_token_entropy"] = vmax(tokens);
  f["sample_std_token_entropy"] = sd(tokens);
  f["sample_median_token_entropy"] = quant(tokens, 0.5);

  bool found = false;
  std::vector<double> ans;
  if (const Trajectory* ft = final_traj(s)) ans = answer_tokens(*ft, found);
  for (const char* st : stats) f[std::string("sample_") + st + "_answer_token_entropy"] = stat(ans, st);
  f["answer_format_ok"] = found ? 1 : 0;

  std::vector<int> agents;
  for (const auto& t : s.trajectories) {
    if (std::find(agents.begin(), agents.end(), t.agent_index) == agents.end()) agents.push_back(t.agent_index);
  }
  const double n = static_cast<double>(s.trajectories.size());
  const std::map<Architecture, double> code{{Architecture::centralized, 0}, {Architecture::debate, 1},
                                            {Architecture::hybrid, 2}, {Architecture::sequential, 3},
                                            {Architecture::single, 4}};
  f["system_architecture_code"] = code.at(s.architecture);
  f["system_num_agents"] = static_cast<double>(agents.size());
  f["system_total_inference_count"] = n;
  f["system_experiment_total_entropy"] = sum(tokens);
  f["system_avg_entropy_per_inference"] = ratio(sum(tokens), n);
  f["total_reasoning_time_ms"] = time;
  f["total_token_count"] = static_cast<double>(tokens.size());
  f["mean_agent_token_count"] = ratio(static_cast<double>(tokens.size()), n);
  f["answer_token_count"] = static_cast<double>(ans.size());
  f["mean_inference_time_ms"] = ratio(time, n);

  if (base) {
    std::vector<double> b;
    for (const auto& t : base->trajectories) {
      const auto e = ents(t);
      b.insert(b.end(), e.begin(), e.end());
    }
    bool bfound = false;
    std::vector<double> bans;
    if (const Trajectory* ft = final_traj(*base)) bans = answer_tokens(*ft, bfound);
    f["base_sample_total_entropy"] = sum(b);
    f["base_sample_token_count"] = static_cast<double>(b.size());
    f["base_sample_mean_entropy"] = mean(b);
    f["base_sample_max_entropy"] = vmax(b);
    f["base_sample_min_entropy"] = vmin(b);
    f["base_sample_std_entropy"] = sd(b);
    f["base_sample_median_entropy"] = quant(b, 0.5);
    f["base_model_answer_token_count"] = static_cast<double>(bans.size());
    f["base_model_mean_answer_token_entropy"] = mean(bans);
    f["base_model_max_answer_token_entropy"] = vmax(bans);
    f["sample_entropy_ratio_vs_base_total"] = ratio(sum(traj), sum(b));
    f["sample_entropy_reduction_vs_base_total"] = sum(b) - sum(traj);
    f["sample_mean_entropy_ratio_vs_base"] = ratio(mean(tokens), mean(b));
    f["sample_mean_entropy_reduction_vs_base"] = mean(b) - mean(tokens);
    f["answer_entropy_shift_vs_base"] = mean(bans) - mean(ans);
    f["answer_entropy_ratio_vs_base"] = ratio(mean(ans), mean(bans));
    f["token_count_ratio_vs_base"] = ratio(static_cast<double>(tokens.size()), static_cast<double>(b.size()));
    f["base_model_is_correct"] = base->is_finally_correct ? 1 : 0;
    f["base_model_format_ok"] = base->extracted_answer ? 1 : 0;
    f["base_model_agrees_with_mas"] =
        base->extracted_answer && s.extracted_answer && *base->extracted_answer == *s.extracted_answer;
    bool numeric = false;
    if (base->extracted_answer) {
      const std::string& a = *base->extracted_answer;
      numeric = !a.empty() && std::all_of(a.begin(), a.end(), [](char c) { return c >= '0' && c <= '9'; });
    }
    f["base_model_answer_is_numeric"] = numeric ? 1 : 0;
  }
  return f;
}

}  // namespace oracle

// Random trace with at most 3 agents, `rounds` rounds and at most 5 tokens per
// trajectory. Answer tokens use the layout the oracle expects.
inline SampleTrace scripted_trace(std::mt19937_64& gen, Architecture arch, int rounds, const std::string& pid) {
  std::uniform_real_distribution<double> ent(0.0, 3.0);
  std::uniform_int_distribution<int> coin(0, 9);
  SampleTrace s;
  s.run_id = "run";
  s.problem_id = pid;
  s.architecture = arch;
  s.rounds = rounds;
  const int agents = arch == Architecture::single ? 1 : 3;
  for (int r = 1; r <= rounds; ++r) {
    for (int a = 0; a < agents; ++a) {
      std::vector<double> e;
      std::vector<std::string> texts;
      const int filler = coin(gen) % 2;
      for (int k = 0; k < filler; ++k) texts.push_back("so ");
      if (coin(gen) < 7) {
        texts.push_back("\\boxed{");
        const int digits = 1 + coin(gen) % 2;
        for (int k = 0; k < digits; ++k) texts.push_back(std::string(1, static_cast<char>('1' + coin(gen) % 3)));
        texts.push_back("}");
      } else {
        const int extra = coin(gen) % 5;  // may leave the trajectory empty
        for (int k = 0; k < extra; ++k) texts.push_back("w");
      }
      for (std::size_t k = 0; k < texts.size(); ++k) e.push_back(coin(gen) == 0 ? 0.0 : ent(gen));
      s.trajectories.push_back(make_traj("A" + std::to_string(a), a, r, e, texts, 5 + coin(gen) * 7));
    }
  }
  // Debate's final text is one of the last-round outputs; single ends with its own.
  s.final_text = s.trajectories.back().text;
  if (arch == Architecture::debate) {
    s.final_text = s.trajectories[s.trajectories.size() - 1 - coin(gen) % 3].text;
  }
  const auto open = s.final_text.rfind("\\boxed{");
  if (open != std::string::npos) {
    const auto close = s.final_text.find('}', open);
    s.extracted_answer = s.final_text.substr(open + 7, close - open - 7);
  }
  s.is_finally_correct = coin(gen) < 5;
  return s;
}

}  // namespace masuq::testing
