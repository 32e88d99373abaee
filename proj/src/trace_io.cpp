#include "masuq/trace_io.hpp"

#include <map>
#include <sstream>

#include "masuq/error.hpp"

namespace masuq {
namespace {

std::string dump_line(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

// Field access that reports the offending line.
struct Ctx {
  const std::string& source;
  std::size_t line;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::SchemaError, source + ":" + std::to_string(line) + ": " + msg);
  }

  const Json& field(const Json& j, const char* key) const {
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }
};

template <typename T>
T get_as(const Ctx& ctx, const Json& j, const char* key) {
  const Json& v = ctx.field(j, key);
  try {
    return v.get<T>();
  } catch (const Json::exception&) {
    ctx.fail(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

Json to_json(const TokenRecord& token) {
  Json j{{"token_text", token.token_text}, {"entropy", token.entropy}};
  if (token.top_logprobs) {
    Json arr = Json::array();
    for (const auto& [tok, lp] : *token.top_logprobs) arr.push_back(Json::array({tok, lp}));
    j["top_logprobs"] = std::move(arr);
  }
  if (token.truncation_k) j["truncation_k"] = *token.truncation_k;
  return j;
}

Json to_json(const Trajectory& traj, const std::string& run_id, const std::string& problem_id) {
  Json tokens = Json::array();
  for (const auto& t : traj.tokens) tokens.push_back(to_json(t));
  return Json{{"kind", "trajectory"},
              {"run_id", run_id},
              {"problem_id", problem_id},
              {"agent_name", traj.agent_name},
              {"agent_index", traj.agent_index},
              {"round", traj.round},
              {"tokens", std::move(tokens)},
              {"text", traj.text},
              {"duration_ms", traj.duration_ms},
              {"prompt_chars", traj.prompt_chars}};
}

Json to_json(const RunManifest& m) {
  return Json{{"kind", "manifest"},
              {"run_id", m.run_id},
              {"model_endpoint", m.model_endpoint},
              {"temperature", m.sampling.temperature},
              {"top_p", m.sampling.top_p},
              {"max_tokens", m.sampling.max_tokens},
              {"logprob_k", m.sampling.logprob_k},
              {"architecture", std::string(to_string(m.architecture))},
              {"rounds", m.rounds},
              {"dataset_path", m.dataset_path},
              {"feature_manifest_version", m.feature_manifest_version},
              {"started_at", m.started_at},
              {"wall_clock_ms", m.wall_clock_ms}};
}

Json summary_json(const SampleTrace& t) {
  return Json{{"kind", "sample_summary"},
              {"run_id", t.run_id},
              {"problem_id", t.problem_id},
              {"architecture", std::string(to_string(t.architecture))},
              {"rounds", t.rounds},
              {"trajectory_count", t.trajectories.size()},
              {"final_text", t.final_text},
              {"extracted_answer", t.extracted_answer ? Json(*t.extracted_answer) : Json(nullptr)},
              {"is_finally_correct", t.is_finally_correct},
              {"started_at", t.started_at},
              {"finished_at", t.finished_at}};
}

TokenRecord token_from_json(const Json& j) {
  TokenRecord t;
  t.token_text = j.at("token_text").get<std::string>();
  t.entropy = j.at("entropy").get<double>();
  if (auto it = j.find("top_logprobs"); it != j.end() && !it->is_null()) {
    TopLogprobs lps;
    for (const auto& pair : *it) lps.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<double>());
    t.top_logprobs = std::move(lps);
  }
  if (auto it = j.find("truncation_k"); it != j.end() && !it->is_null()) {
    t.truncation_k = it->get<int>();
  }
  return t;
}

Trajectory trajectory_from_json(const Json& j) {
  Trajectory t;
  t.agent_name = j.at("agent_name").get<std::string>();
  t.agent_index = j.at("agent_index").get<int>();
  t.round = j.at("round").get<int>();
  for (const auto& tok : j.at("tokens")) t.tokens.push_back(token_from_json(tok));
  t.text = j.at("text").get<std::string>();
  t.duration_ms = j.at("duration_ms").get<std::int64_t>();
  t.prompt_chars = j.at("prompt_chars").get<std::int64_t>();
  return t;
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.model_endpoint = j.at("model_endpoint").get<std::string>();
  m.sampling.temperature = j.at("temperature").get<double>();
  m.sampling.top_p = j.at("top_p").get<double>();
  m.sampling.max_tokens = j.at("max_tokens").get<int>();
  m.sampling.logprob_k = j.value("logprob_k", 20);
  m.architecture = parse_architecture(j.at("architecture").get<std::string>());
  m.rounds = j.at("rounds").get<int>();
  m.dataset_path = j.at("dataset_path").get<std::string>();
  m.feature_manifest_version = j.value("feature_manifest_version", std::string());
  m.started_at = j.value("started_at", std::int64_t{0});
  m.wall_clock_ms = j.value("wall_clock_ms", std::int64_t{0});
  return m;
}

std::vector<std::string> encode_sample(const SampleTrace& trace) {
  std::vector<std::string> lines;
  lines.reserve(trace.trajectories.size() + 1);
  for (const auto& t : trace.trajectories) {
    lines.push_back(dump_line(to_json(t, trace.run_id, trace.problem_id)));
  }
  lines.push_back(dump_line(summary_json(trace)));
  return lines;
}

std::string encode_manifest(const RunManifest& manifest) { return dump_line(to_json(manifest)); }

TraceFile parse_trace_lines(std::istream& in, const std::string& source) {
  TraceFile file;
  // Trajectories wait here until their sample_summary arrives.
  std::map<std::string, std::vector<Trajectory>> pending;
  std::vector<std::string> pending_order;
  bool have_manifest = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Ctx ctx{source, lineno};
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      ctx.fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) ctx.fail("record is not an object");
    const auto kind = get_as<std::string>(ctx, j, "kind");
    try {
      if (kind == "manifest") {
        if (have_manifest) ctx.fail("second manifest record");
        if (lineno != 1) ctx.fail("manifest must be the first line");
        file.manifest = manifest_from_json(j);
        have_manifest = true;
      } else if (!have_manifest) {
        ctx.fail("first record must be the manifest");
      } else if (kind == "trajectory") {
        const auto pid = get_as<std::string>(ctx, j, "problem_id");
        if (get_as<std::string>(ctx, j, "run_id") != file.manifest.run_id) {
          ctx.fail("trajectory run_id does not match manifest");
        }
        if (!pending.contains(pid)) pending_order.push_back(pid);
        pending[pid].push_back(trajectory_from_json(j));
      } else if (kind == "sample_summary") {
        SampleTrace s;
        s.run_id = get_as<std::string>(ctx, j, "run_id");
        if (s.run_id != file.manifest.run_id) ctx.fail("summary run_id does not match manifest");
        s.problem_id = get_as<std::string>(ctx, j, "problem_id");
        s.architecture = parse_architecture(get_as<std::string>(ctx, j, "architecture"));
        s.rounds = get_as<int>(ctx, j, "rounds");
        s.final_text = get_as<std::string>(ctx, j, "final_text");
        const Json& ans = ctx.field(j, "extracted_answer");
        if (!ans.is_null()) s.extracted_answer = ans.get<std::string>();
        s.is_finally_correct = get_as<bool>(ctx, j, "is_finally_correct");
        s.started_at = get_as<std::int64_t>(ctx, j, "started_at");
        s.finished_at = get_as<std::int64_t>(ctx, j, "finished_at");
        if (auto it = pending.find(s.problem_id); it != pending.end()) {
          s.trajectories = std::move(it->second);
          pending.erase(it);
          std::erase(pending_order, s.problem_id);
        }
        file.samples.push_back(std::move(s));
      } else {
        ctx.fail("unknown record kind '" + kind + "'");
      }
    } catch (const Json::exception& e) {
      ctx.fail(std::string("bad field: ") + e.what());
    } catch (const Error& e) {
      if (e.code() != Errc::SchemaError) throw;
      const std::string msg = e.what();
      if (msg.find(source + ":") != std::string::npos) throw;
      ctx.fail(msg);
    }
  }
  if (!have_manifest) {
    throw Error(Errc::SchemaError, source + ": missing manifest record");
  }
  for (const auto& pid : pending_order) {
    for (auto& t : pending[pid]) file.orphans.emplace_back(pid, std::move(t));
  }
  return file;
}

TraceFile read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open trace file " + path.string());
  return parse_trace_lines(in, path.string());
}

std::vector<Problem> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open dataset " + path.string());
  const std::string source = path.string();
  std::vector<Problem> out;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Ctx ctx{source, lineno};
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      ctx.fail(std::string("malformed JSON: ") + e.what());
    }
    Problem p;
    p.id = get_as<std::string>(ctx, j, "id");
    p.question = get_as<std::string>(ctx, j, "question");
    p.gold_answer = get_as<std::string>(ctx, j, "answer");
    if (j.contains("task_kind")) {
      try {
        p.task_kind = parse_task_kind(j["task_kind"].get<std::string>());
      } catch (const Error& e) {
        ctx.fail(e.what());
      }
    }
    if (auto it = j.find("verdict"); it != j.end() && !it->is_null()) {
      p.external_verdict = it->get<bool>();
    }
    if (p.id.empty()) ctx.fail("id must be non-empty");
    if (p.gold_answer.empty()) ctx.fail("answer must be non-empty");
    if (seen.contains(p.id)) ctx.fail("duplicate id '" + p.id + "'");
    seen[p.id] = out.size();
    out.push_back(std::move(p));
  }
  return out;
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw Error(Errc::IoError, "cannot write " + path.string());
}

void TraceWriter::write_line(const std::string& line) {
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
}

void TraceWriter::write_sample(const SampleTrace& trace) {
  const auto lines = encode_sample(trace);
  std::lock_guard lock(mutex_);
  for (const auto& l : lines) out_ << l << '\n';
  out_.flush();
}

void TraceWriter::write_partial(const std::string& run_id, const std::string& problem_id,
                                const std::vector<Trajectory>& trajectories) {
  std::lock_guard lock(mutex_);
  for (const auto& t : trajectories) out_ << dump_line(to_json(t, run_id, problem_id)) << '\n';
  out_.flush();
}

void TraceWriter::flush() {
  std::lock_guard lock(mutex_);
  out_.flush();
}

}  // namespace masuq
