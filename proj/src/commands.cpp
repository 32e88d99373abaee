#include "masuq/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

#include "masuq/analysis.hpp"
#include "masuq/error.hpp"
#include "masuq/http_gateway.hpp"
#include "masuq/mock_gateway.hpp"
#include "masuq/stat_tests.hpp"
#include "masuq/topology.hpp"

namespace masuq {
namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return fs::path(path.string() + suffix);
}

std::unique_ptr<Gateway> make_gateway(const CliConfig& c) {
  if (!c.mock_script.empty()) {
    return std::make_unique<MockGateway>(MockScript::load(c.mock_script), c.mock_script);
  }
  HttpGatewayConfig hc;
  hc.base_url = c.endpoint;
  hc.model = c.model;
  hc.timeout_seconds = c.timeout_seconds;
  if (const char* key = std::getenv(c.api_key_env.c_str())) hc.api_key = key;
  return std::make_unique<HttpGateway>(hc);
}

ArchitectureSpec resolve_spec(const CliConfig& c) {
  if (c.arch_spec.empty()) return default_spec(c.architecture);
  ArchitectureSpec spec = ArchitectureSpec::load(c.arch_spec);
  if (spec.kind != c.architecture) {
    throw Error(Errc::ConfigError, "arch_spec " + c.arch_spec + " describes '" +
                                       std::string(to_string(spec.kind)) + "' but architecture is '" +
                                       std::string(to_string(c.architecture)) + "'");
  }
  return spec;
}

struct Outcome {
  bool done = false;
  std::optional<SampleTrace> trace;
  std::vector<Trajectory> partial;
  std::string error;
};

std::int64_t partial_duration(const std::vector<Trajectory>& ts) {
  std::int64_t d = 0;
  for (const auto& t : ts) d += t.duration_ms;
  return d;
}

Matrix to_matrix(const std::vector<FeatureRow>& rows, std::size_t cols) {
  Matrix X;
  X.rows = rows.size();
  X.cols = cols;
  X.data.reserve(rows.size() * cols);
  for (const auto& r : rows) X.data.insert(X.data.end(), r.values.begin(), r.values.end());
  return X;
}

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// Runs a statistic, reporting an error string instead of aborting the report.
template <typename F>
Json guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return Json{{"error", e.what()}};
  }
}

struct PairedRun {
  std::vector<CausalInput> inputs;
  std::vector<double> mas_entropy;  // per-token mean over the whole MAS sample
  std::vector<int> mas_correct;
  std::vector<std::string> unpaired;
};

double sample_mean_token_entropy(const SampleTrace& t) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& traj : t.trajectories) {
    for (const auto& tok : traj.tokens) sum += tok.entropy;
    n += traj.tokens.size();
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

PairedRun pair_for_causal(const ReportInputs& in) {
  if (!in.traces || !in.base_traces) {
    throw Error(Errc::ConfigError, "causal and quadrant reports need --traces and --base-traces");
  }
  const TraceFile mas = read_trace_file(*in.traces);
  const TraceFile base = read_trace_file(*in.base_traces);
  if (mas.manifest.rounds < 2) {
    throw Error(Errc::ConfigError, "causal decomposition needs a MAS run with at least 2 rounds");
  }
  if (base.manifest.architecture != Architecture::single || base.manifest.rounds != 1) {
    throw Error(Errc::ConfigError, "base traces must come from a single-agent run with 1 round");
  }
  std::map<std::string, const SampleTrace*> by_id;
  for (const auto& s : base.samples) by_id.emplace(s.problem_id, &s);
  PairedRun out;
  for (const auto& s : mas.samples) {
    auto it = by_id.find(s.problem_id);
    if (it == by_id.end()) {
      out.unpaired.push_back("UnpairedSample: no base trace for problem " + s.problem_id);
      continue;
    }
    CausalInput ci;
    ci.key = s.run_id + "/" + s.problem_id;
    ci.h_sas = sample_mean_token_entropy(*it->second);
    ci.h_r1 = round_mean_token_entropy(s, 1);
    ci.h_r2 = round_mean_token_entropy(s, 2);
    ci.sas_correct = it->second->is_finally_correct ? 1 : 0;
    ci.mas_correct = s.is_finally_correct ? 1 : 0;
    out.inputs.push_back(ci);
    out.mas_entropy.push_back(sample_mean_token_entropy(s));
    out.mas_correct.push_back(ci.mas_correct);
  }
  if (out.inputs.empty()) throw Error(Errc::EmptyInput, "no MAS sample pairs with a base trace");
  return out;
}

Json quadrant_json(const std::array<std::size_t, 4>& counts) {
  Json q = Json::object();
  for (int i = 0; i < 4; ++i) q[std::string(to_string(static_cast<Quadrant>(i)))] = counts[i];
  return q;
}

Json split_json(const ConfidenceSplit& s) {
  return Json{{"median_entropy", s.threshold},
              {"low_entropy_correct", s.low_correct},
              {"low_entropy_incorrect", s.low_incorrect},
              {"high_entropy_correct", s.high_correct},
              {"high_entropy_incorrect", s.high_incorrect}};
}

Json report_calibration(const ReportInputs& in, const fs::path& out) {
  if (!in.matrix) throw Error(Errc::ConfigError, "calibration report needs --matrix");
  const FeatureMatrix m = read_feature_csv(*in.matrix);
  const auto col = std::find(m.names.begin(), m.names.end(), "sample_mean_entropy");
  if (col == m.names.end()) {
    throw Error(Errc::SchemaError, in.matrix->string() + ":1: no sample_mean_entropy column");
  }
  const auto j = static_cast<std::size_t>(col - m.names.begin());
  std::vector<double> h, conf;
  std::vector<int> y;
  for (const auto& r : m.rows) {
    h.push_back(r.values[j]);
    conf.push_back(entropy_to_confidence(r.values[j]));
    y.push_back(r.label);
  }
  const EceResult e = ece(conf, y, in.bins);
  Json bins = Json::array();
  std::string csv = "bin,lo,hi,count,confidence,accuracy\n";
  for (const auto& b : e.bins) {
    bins.push_back(Json{{"bin", b.index},
                        {"lo", b.lo},
                        {"hi", b.hi},
                        {"count", b.count},
                        {"confidence", b.confidence},
                        {"accuracy", b.accuracy}});
    csv += std::to_string(b.index) + "," + format_double(b.lo) + "," + format_double(b.hi) + "," +
           std::to_string(b.count) + "," + format_double(b.confidence) + "," +
           format_double(b.accuracy) + "\n";
  }
  Json report{{"kind", "calibration"},
              {"rows", m.rows.size()},
              {"bins", in.bins},
              {"ece", e.value},
              {"reliability", std::move(bins)},
              {"confidently_wrong", split_json(confidently_wrong_split(h, y))}};
  write_json(out, report);
  write_text(sibling(out, ".csv"), csv);
  return report;
}

Json report_causal(const ReportInputs& in, const fs::path& out, bool quadrants_only) {
  const PairedRun p = pair_for_causal(in);
  const CausalSummary s = causal_decompose(p.inputs);
  const auto counts = quadrant_counts(s.records);
  std::string csv = quadrants_only
                        ? "sample_key,delta_h,delta_acc,quadrant\n"
                        : "sample_key,h_sas,h_r1,h_r2,role_effect,interaction_effect,total_effect,delta_acc\n";
  for (const auto& r : s.records) {
    if (quadrants_only) {
      csv += r.key + "," + format_double(r.interaction_effect) + "," + std::to_string(r.delta_acc) +
             "," + std::string(to_string(quadrant_classify(r.interaction_effect, r.delta_acc))) + "\n";
    } else {
      csv += r.key + "," + format_double(r.h_sas) + "," + format_double(r.h_r1) + "," +
             format_double(r.h_r2) + "," + format_double(r.role_effect) + "," +
             format_double(r.interaction_effect) + "," + format_double(r.total_effect) + "," +
             std::to_string(r.delta_acc) + "\n";
    }
  }
  Json report{{"kind", quadrants_only ? "quadrants" : "causal"},
              {"pairs", s.records.size()},
              {"unpaired", p.unpaired},
              {"quadrants", quadrant_json(counts)}};
  if (!quadrants_only) {
    std::vector<double> role, inter;
    long b01 = 0, b10 = 0;
    for (const auto& r : s.records) {
      role.push_back(r.role_effect);
      inter.push_back(r.interaction_effect);
    }
    for (const auto& ci : p.inputs) {
      if (!ci.sas_correct && ci.mas_correct) ++b01;
      if (ci.sas_correct && !ci.mas_correct) ++b10;
    }
    auto wilcoxon = [](const std::vector<double>& v) {
      return guarded([&] {
        const TestResult t = wilcoxon_signed_rank(v);
        return Json{{"statistic", t.statistic}, {"p_value", t.p_value}};
      });
    };
    auto cohen = [](const std::vector<double>& v) {
      return guarded([&] { return Json{{"d", nullable(cohens_d(v))}}; });
    };
    report["mean_role_effect"] = s.mean_role;
    report["mean_interaction_effect"] = s.mean_interaction;
    report["mean_total_effect"] = s.mean_total;
    report["fraction_interaction_negative"] = s.fraction_interaction_negative;
    report["wilcoxon_role"] = wilcoxon(role);
    report["wilcoxon_interaction"] = wilcoxon(inter);
    report["cohens_d_role"] = cohen(role);
    report["cohens_d_interaction"] = cohen(inter);
    report["mcnemar"] = guarded([&] {
      const TestResult t = mcnemar(b01, b10);
      return Json{{"sas_wrong_mas_right", b01}, {"sas_right_mas_wrong", b10},
                  {"statistic", t.statistic}, {"p_value", t.p_value}};
    });
    report["confidently_wrong"] = split_json(confidently_wrong_split(p.mas_entropy, p.mas_correct));
  }
  write_json(out, report);
  write_text(sibling(out, ".csv"), csv);
  return report;
}

}  // namespace

std::string format_run_timestamp(std::int64_t utc_ms) {
  std::time_t secs = static_cast<std::time_t>(utc_ms >= 0 ? utc_ms / 1000 : (utc_ms - 999) / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string seed_digest(std::uint64_t seed, Architecture arch, int rounds, const std::string& dataset) {
  const std::string key = std::to_string(seed) + "|" + std::string(to_string(arch)) + "|" +
                          std::to_string(rounds) + "|" + dataset;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 8);
}

std::string make_run_id(std::int64_t utc_ms, std::uint64_t seed, Architecture arch, int rounds,
                        const std::string& dataset) {
  return format_run_timestamp(utc_ms) + "-" + seed_digest(seed, arch, rounds, dataset);
}

double round_mean_token_entropy(const SampleTrace& trace, int round) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& t : trace.trajectories) {
    if (t.round != round) continue;
    for (const auto& tok : t.tokens) sum += tok.entropy;
    n += t.tokens.size();
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

RunResult cmd_run(const CliConfig& config, std::ostream& err) {
  config.validate();
  const std::vector<Problem> problems = read_dataset(config.dataset);
  const ArchitectureSpec spec = resolve_spec(config);
  const std::unique_ptr<Gateway> inner = make_gateway(config);
  BoundedGateway gateway(*inner, config.max_in_flight);
  const bool virtual_clock = gateway.deterministic_timing();

  const auto wall_begin = std::chrono::steady_clock::now();
  const std::int64_t start = virtual_clock ? config.virtual_start_ms : now_utc_ms();

  RunResult result;
  result.run_id = make_run_id(start, config.seed, config.architecture, config.rounds, config.dataset);
  const fs::path dir = fs::path(config.out_dir) / result.run_id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  result.trace_path = dir / "trace.jsonl";
  const fs::path part = sibling(result.trace_path, ".part");

  RunManifest manifest;
  manifest.run_id = result.run_id;
  manifest.model_endpoint = gateway.describe();
  manifest.sampling = config.sampling;
  manifest.architecture = config.architecture;
  manifest.rounds = config.rounds;
  manifest.dataset_path = config.dataset;
  manifest.feature_manifest_version = manifest_version(config.rounds);
  manifest.started_at = start;

  RunOptions options;
  options.run_id = result.run_id;
  if (virtual_clock) options.virtual_start_ms = start;
  options.parallel_workers = config.parallel_workers;

  std::vector<Outcome> outcomes(problems.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= problems.size()) return;
      Outcome o;
      try {
        o.trace = run_sample(problems[i], spec, config.rounds, gateway, config.sampling, options);
      } catch (const SampleFailure& f) {
        o.partial = f.partial();
        o.error = f.what();
      } catch (const std::exception& e) {
        o.error = problems[i].id + ": " + e.what();
      }
      o.done = true;
      {
        std::lock_guard lock(mu);
        outcomes[i] = std::move(o);
      }
      ready.notify_all();
    }
  };

  std::int64_t virtual_elapsed = 0;
  {
    TraceWriter writer(part);
    writer.write_line(encode_manifest(manifest));
    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), std::max<std::size_t>(problems.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    // Samples land in dataset order whatever order workers finish in.
    for (std::size_t i = 0; i < problems.size(); ++i) {
      Outcome o;
      {
        std::unique_lock lock(mu);
        ready.wait(lock, [&] { return outcomes[i].done; });
        o = std::move(outcomes[i]);
      }
      if (o.trace) {
        writer.write_sample(*o.trace);
        virtual_elapsed += o.trace->finished_at - o.trace->started_at;
        ++result.succeeded;
      } else {
        writer.write_partial(result.run_id, problems[i].id, o.partial);
        virtual_elapsed += partial_duration(o.partial);
        err << "failed sample " << problems[i].id << ": " << o.error << "\n";
        result.failures.push_back(o.error);
      }
    }
  }

  manifest.wall_clock_ms =
      virtual_clock ? virtual_elapsed
                    : std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                            wall_begin)
                          .count();
  // Final file: the manifest line now carries the measured wall clock.
  {
    std::ifstream in(part, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot reopen " + part.string());
    std::string first, rest;
    std::getline(in, first);
    rest.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    in.close();
    write_text(result.trace_path, encode_manifest(manifest) + "\n" + rest);
  }
  fs::remove(part, ec);
  return result;
}

FeatureMatrix cmd_features(const fs::path& traces, const std::optional<fs::path>& base_traces,
                           FeatureGroup group, const fs::path& out, std::ostream& err) {
  const TraceFile mas = read_trace_file(traces);
  std::optional<TraceFile> base;
  if (base_traces) base = read_trace_file(*base_traces);
  FeatureMatrix m = extract_run(mas, base ? &*base : nullptr, group);
  for (const auto& line : m.unpaired) err << line << "\n";
  write_feature_csv(out, m);
  return m;
}

TrainResult cmd_train(const std::vector<fs::path>& matrices, int folds, std::uint64_t seed,
                      const fs::path& model_out) {
  if (matrices.empty()) throw Error(Errc::ConfigError, "train needs at least one --matrix");
  FeatureMatrix all = read_feature_csv(matrices.front());
  for (std::size_t i = 1; i < matrices.size(); ++i) {
    FeatureMatrix m = read_feature_csv(matrices[i]);
    if (m.names != all.names || m.manifest_version != all.manifest_version || m.group != all.group) {
      throw Error(Errc::ManifestMismatch, matrices[i].string() + " does not share the schema of " +
                                              matrices.front().string());
    }
    for (auto& r : m.rows) all.rows.push_back(std::move(r));
  }
  const Matrix X = to_matrix(all.rows, all.dimension());
  std::vector<int> y;
  for (const auto& r : all.rows) y.push_back(r.label);

  TrainResult res;
  res.cv = cross_validate(X, y, folds, seed);
  res.model = train_ensemble(X, y, JudgerConfig::defaults(seed));
  res.model.manifest_version = all.manifest_version;
  res.model.group = std::string(to_string(all.group));
  res.model.feature_names = all.names;

  const FeatureImportance imp = importance_metrics(res.model, X);
  std::vector<std::size_t> order(all.names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return imp.mean_importance[a] > imp.mean_importance[b];
  });
  Json top = Json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(20, order.size()); ++k) {
    const std::size_t j = order[k];
    top.push_back(Json{{"feature", all.names[j]},
                       {"mean_importance", imp.mean_importance[j]},
                       {"shap_correlation", imp.shap_correlation[j]}});
  }
  const long positives = std::count(y.begin(), y.end(), 1);
  res.report = Json{{"rows", all.rows.size()},
                    {"positives", positives},
                    {"dimension", all.dimension()},
                    {"manifest_version", all.manifest_version},
                    {"group", std::string(to_string(all.group))},
                    {"folds", folds},
                    {"seed", seed},
                    {"fold_accuracy", res.cv.fold_accuracy},
                    {"mean_accuracy", res.cv.mean_accuracy},
                    {"std_accuracy", res.cv.std_accuracy},
                    {"oof_accuracy", accuracy_at_half(res.cv.oof_probability, y)},
                    {"top_features", std::move(top)}};
  res.model.save(model_out);
  write_json(sibling(model_out, ".cv.json"), res.report);
  return res;
}

Json cmd_judge(const fs::path& model_path, const std::vector<fs::path>& candidates, const fs::path& out) {
  if (candidates.empty()) throw Error(Errc::EmptyCandidates, "judge needs at least one --candidates file");
  const EnsembleModel model = EnsembleModel::load(model_path);
  std::vector<FeatureMatrix> mats;
  std::vector<std::map<std::string, std::size_t>> index;
  for (const auto& path : candidates) {
    FeatureMatrix m = read_feature_csv(path);
    if (m.names != model.feature_names) {
      throw Error(Errc::ManifestMismatch, path.string() + " columns differ from the model's features");
    }
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      if (!idx.emplace(m.rows[i].problem_id, i).second) {
        throw Error(Errc::SchemaError, path.string() + ":" + std::to_string(i + 2) +
                                           ": duplicate problem_id " + m.rows[i].problem_id);
      }
    }
    mats.push_back(std::move(m));
    index.push_back(std::move(idx));
  }

  Json selections = Json::array();
  std::size_t chosen_correct = 0, any_correct = 0;
  std::vector<std::size_t> per_candidate_correct(mats.size(), 0);
  for (const auto& row0 : mats.front().rows) {
    const std::string& pid = row0.problem_id;
    std::vector<const FeatureRow*> rows;
    for (std::size_t c = 0; c < mats.size(); ++c) {
      auto it = index[c].find(pid);
      if (it == index[c].end()) break;
      rows.push_back(&mats[c].rows[it->second]);
    }
    if (rows.size() != mats.size()) continue;
    std::vector<std::vector<double>> xs;
    for (const auto* r : rows) xs.push_back(r->values);
    const Selection sel = pass_at_k_select(model, xs);
    bool any = false;
    Json keys = Json::array();
    for (std::size_t c = 0; c < rows.size(); ++c) {
      keys.push_back(rows[c]->sample_key());
      if (rows[c]->label) {
        any = true;
        ++per_candidate_correct[c];
      }
    }
    const int label = rows[sel.index]->label;
    chosen_correct += static_cast<std::size_t>(label);
    any_correct += any ? 1 : 0;
    selections.push_back(Json{{"problem_id", pid},
                              {"selected", sel.index},
                              {"selected_key", rows[sel.index]->sample_key()},
                              {"probabilities", sel.probabilities},
                              {"candidate_keys", std::move(keys)},
                              {"selected_label", label}});
  }
  const double n = static_cast<double>(selections.size());
  Json per = Json::array();
  for (auto c : per_candidate_correct) per.push_back(n > 0 ? static_cast<double>(c) / n : 0.0);
  Json report{{"k", mats.size()},
              {"problems", selections.size()},
              {"selection_accuracy", n > 0 ? static_cast<double>(chosen_correct) / n : 0.0},
              {"oracle_accuracy", n > 0 ? static_cast<double>(any_correct) / n : 0.0},
              {"candidate_accuracy", std::move(per)},
              {"selections", std::move(selections)}};
  write_json(out, report);
  return report;
}

ReportKind parse_report_kind(std::string_view text) {
  if (text == "calibration") return ReportKind::calibration;
  if (text == "causal") return ReportKind::causal;
  if (text == "quadrants") return ReportKind::quadrants;
  throw Error(Errc::ConfigError, "unknown report kind '" + std::string(text) + "'");
}

Json cmd_report(ReportKind kind, const ReportInputs& inputs, const fs::path& out) {
  switch (kind) {
    case ReportKind::calibration: return report_calibration(inputs, out);
    case ReportKind::causal: return report_causal(inputs, out, false);
    case ReportKind::quadrants: return report_causal(inputs, out, true);
  }
  throw Error(Errc::ConfigError, "unknown report kind");
}

std::size_t cmd_validate(const fs::path& traces, std::ostream& out) {
  const TraceFile file = read_trace_file(traces);
  std::size_t problems = 0;
  if (file.manifest.feature_manifest_version != manifest_version(file.manifest.rounds)) {
    out << "manifest: feature_manifest_version '" << file.manifest.feature_manifest_version
        << "' does not match rounds " << file.manifest.rounds << "\n";
    ++problems;
  }
  for (const auto& s : file.samples) {
    if (s.architecture != file.manifest.architecture || s.rounds != file.manifest.rounds) {
      out << s.problem_id << ": architecture or rounds differ from the manifest\n";
      ++problems;
    }
    for (const auto& v : validate_trace(s)) {
      out << s.problem_id << ": " << v << "\n";
      ++problems;
    }
  }
  for (const auto& [pid, t] : file.orphans) {
    out << pid << ": orphan trajectory " << t.agent_name << " @ round " << t.round << "\n";
    ++problems;
  }
  return problems;
}

}  // namespace masuq
