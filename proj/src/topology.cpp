#include "masuq/topology.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <future>

#include "masuq/verifier.hpp"

namespace masuq {
namespace {

using Json = nlohmann::json;

const Trajectory& find_trajectory(std::span<const Trajectory> history, int agent, int round,
                                  const ArchitectureSpec& spec) {
  for (const auto& t : history) {
    if (t.agent_index == agent && t.round == round) return t;
  }
  throw Error(Errc::HistoryIncomplete, "missing " + spec.agent_name(agent) + " @ round " +
                                           std::to_string(round));
}

bool is_placeholder_char(char c, bool first) {
  return c == '_' || std::isalpha(static_cast<unsigned char>(c)) ||
         (!first && std::isdigit(static_cast<unsigned char>(c)));
}

std::string substitute(const std::string& tmpl, const std::string& question,
                       const std::string& context_block, const std::string& solutions_block) {
  std::string out;
  out.reserve(tmpl.size() + question.size() + context_block.size() + solutions_block.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && is_placeholder_char(tmpl[j], j == i + 1)) ++j;
      if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
        const std::string name = tmpl.substr(i + 1, j - i - 1);
        if (name == "question") out += question;
        else if (name == "context_block") out += context_block;
        else if (name == "solutions_block") out += solutions_block;
        else throw Error(Errc::PromptRenderError, "unknown placeholder {" + name + "}");
        i = j + 1;
        continue;
      }
    }
    out += tmpl[i++];
  }
  return out;
}

// Last `n` bytes of s without splitting a UTF-8 sequence.
std::string tail(const std::string& s, std::size_t n) {
  if (s.size() <= n) return s;
  std::size_t start = s.size() - n;
  while (start < s.size() && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) ++start;
  return s.substr(start);
}

std::string render_entries(const ContextBundle& ctx, std::size_t limit) {
  std::string out;
  for (std::size_t k = 0; k < ctx.entries.size(); ++k) {
    const auto& e = ctx.entries[k];
    if (k) out += "\n\n";
    out += "[" + e.source_agent + " @ round " + std::to_string(e.source_round) + "]\n";
    out += limit ? tail(e.text, limit) : e.text;
  }
  return out;
}

PromptTemplate template_from_json(const Json& j) {
  return PromptTemplate{j.value("system", std::string()), j.at("user").get<std::string>()};
}

Json template_to_json(const PromptTemplate& t) { return Json{{"system", t.system}, {"user", t.user}}; }

}  // namespace

std::string_view to_string(DecisionRule rule) {
  switch (rule) {
    case DecisionRule::last_round_output: return "last_round_output";
    case DecisionRule::judger_output: return "judger_output";
    case DecisionRule::orchestrator_output: return "orchestrator_output";
    case DecisionRule::majority_vote: return "majority_vote";
  }
  return "last_round_output";
}

DecisionRule parse_decision_rule(std::string_view text) {
  for (auto r : {DecisionRule::last_round_output, DecisionRule::judger_output,
                 DecisionRule::orchestrator_output, DecisionRule::majority_vote}) {
    if (to_string(r) == text) return r;
  }
  throw Error(Errc::ConfigError, "unknown decision rule '" + std::string(text) + "'");
}

const std::string& ArchitectureSpec::agent_name(int index) const {
  if (index >= 0 && index < orchestrator_index()) return roster[static_cast<std::size_t>(index)].name;
  if (orchestrator && index == orchestrator_index()) return orchestrator->name;
  throw Error(Errc::ConfigError, "agent index " + std::to_string(index) + " out of range");
}

void ArchitectureSpec::validate() const {
  auto fail = [&](const std::string& msg) {
    throw Error(Errc::ConfigError, std::string(masuq::to_string(kind)) + " spec: " + msg);
  };
  std::size_t workers = 0;
  bool needs_orch = false;
  DecisionRule rule = DecisionRule::last_round_output;
  switch (kind) {
    case Architecture::single: workers = 1; rule = DecisionRule::last_round_output; break;
    case Architecture::sequential: workers = 4; rule = DecisionRule::judger_output; break;
    case Architecture::centralized:
    case Architecture::hybrid: workers = 3; needs_orch = true; rule = DecisionRule::orchestrator_output; break;
    case Architecture::debate: workers = 3; rule = DecisionRule::majority_vote; break;
  }
  if (roster.size() != workers) fail("roster must have " + std::to_string(workers) + " agents");
  if (orchestrator.has_value() != needs_orch) {
    fail(needs_orch ? "orchestrator required" : "orchestrator not allowed");
  }
  if (decision != rule) fail("decision rule must be " + std::string(masuq::to_string(rule)));
  for (const auto& a : roster) {
    if (a.name.empty()) fail("agent names must be non-empty");
  }
}

ArchitectureSpec ArchitectureSpec::from_json(const Json& j) {
  ArchitectureSpec spec;
  try {
    spec.kind = parse_architecture(j.at("kind").get<std::string>());
    for (const auto& a : j.at("roster")) {
      spec.roster.push_back({a.at("name").get<std::string>(), template_from_json(a.at("prompt"))});
    }
    if (auto it = j.find("orchestrator"); it != j.end() && !it->is_null()) {
      spec.orchestrator = OrchestratorSpec{it->at("name").get<std::string>(),
                                           template_from_json(it->at("feedback")),
                                           template_from_json(it->at("aggregation"))};
    }
    if (auto it = j.find("decision_rule"); it != j.end()) {
      spec.decision = parse_decision_rule(it->get<std::string>());
    } else {
      spec.decision = default_spec(spec.kind).decision;
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::ConfigError, std::string("architecture spec: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, e.what());
  }
  spec.validate();
  return spec;
}

ArchitectureSpec ArchitectureSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open architecture spec " + path.string());
  try {
    return from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
}

Json ArchitectureSpec::to_json() const {
  Json roster_json = Json::array();
  for (const auto& a : roster) roster_json.push_back({{"name", a.name}, {"prompt", template_to_json(a.prompt)}});
  Json j{{"kind", std::string(masuq::to_string(kind))},
         {"roster", std::move(roster_json)},
         {"decision_rule", std::string(masuq::to_string(decision))}};
  if (orchestrator) {
    j["orchestrator"] = {{"name", orchestrator->name},
                         {"feedback", template_to_json(orchestrator->feedback)},
                         {"aggregation", template_to_json(orchestrator->aggregation)}};
  }
  return j;
}

ContextBundle build_context(const ArchitectureSpec& spec, int j, int r,
                            std::span<const Trajectory> history) {
  const int n = spec.orchestrator_index();
  const int orch = n;
  const bool is_orch = spec.orchestrator && j == orch;
  if (r < 1 || j < 0 || j >= spec.agents_per_round()) {
    throw Error(Errc::HistoryIncomplete, "no such (agent, round) pair");
  }
  // (agent, round) references, pushed in ascending (round, execution index).
  std::vector<std::pair<int, int>> refs;
  auto all_prior_rounds = [&](int agents) {
    for (int pr = 1; pr < r; ++pr) {
      for (int a = 0; a < agents; ++a) refs.emplace_back(a, pr);
    }
  };
  switch (spec.kind) {
    case Architecture::single:
      all_prior_rounds(1);
      break;
    case Architecture::sequential:
      if (j == 0) all_prior_rounds(n);
      else refs.emplace_back(j - 1, r);
      break;
    case Architecture::centralized:
      if (is_orch) {
        for (int a = 0; a < n; ++a) refs.emplace_back(a, r);
      } else if (r > 1) {
        refs.emplace_back(orch, r - 1);
      }
      break;
    case Architecture::debate:
      all_prior_rounds(n);
      for (int a = 0; a < j; ++a) refs.emplace_back(a, r);
      break;
    case Architecture::hybrid:
      if (is_orch) {
        for (int a = 0; a < n; ++a) refs.emplace_back(a, r);
      } else {
        if (r > 1) {
          for (int a = 0; a < n; ++a) refs.emplace_back(a, r - 1);
          refs.emplace_back(orch, r - 1);
        }
        for (int a = 0; a < j; ++a) refs.emplace_back(a, r);
      }
      break;
  }
  ContextBundle bundle;
  for (const auto& [a, pr] : refs) {
    const Trajectory& t = find_trajectory(history, a, pr, spec);
    bundle.entries.push_back({t.agent_name, a, pr, t.text});
  }
  return bundle;
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Problem& problem,
                             const ContextBundle& context, const RenderOptions& options) {
  auto render = [&](std::size_t limit) {
    const std::string solutions = render_entries(context, limit);
    const std::string ctx_block = solutions.empty() ? "" : "\n\n" + solutions;
    return RenderedPrompt{substitute(tmpl.system, problem.question, ctx_block, solutions),
                          substitute(tmpl.user, problem.question, ctx_block, solutions)};
  };
  RenderedPrompt p = render(0);
  if (p.user.size() > options.context_budget_chars && !context.entries.empty()) {
    p = render(options.truncated_entry_chars);
  }
  return p;
}

std::int64_t now_utc_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

SampleTrace run_sample(const Problem& problem, const ArchitectureSpec& spec, int rounds,
                       Gateway& gateway, const SamplingParams& sampling, const RunOptions& options) {
  spec.validate();
  if (rounds < 1) throw Error(Errc::ConfigError, "rounds must be >= 1");
  SampleTrace trace;
  trace.run_id = options.run_id;
  trace.problem_id = problem.id;
  trace.architecture = spec.kind;
  trace.rounds = rounds;
  trace.started_at = options.virtual_start_ms ? *options.virtual_start_ms : now_utc_ms();
  auto& history = trace.trajectories;

  auto template_for = [&](int agent, int round) -> const PromptTemplate& {
    if (spec.orchestrator && agent == spec.orchestrator_index()) {
      return round < rounds ? spec.orchestrator->feedback : spec.orchestrator->aggregation;
    }
    return spec.roster[static_cast<std::size_t>(agent)].prompt;
  };
  auto prepare = [&](int agent, int round) {
    const ContextBundle ctx = build_context(spec, agent, round, history);
    const RenderedPrompt p = render_prompt(template_for(agent, round), problem, ctx, options.render);
    GenerationRequest req{p.system, p.user, sampling.temperature, sampling.top_p,
                          sampling.max_tokens, sampling.logprob_k};
    return req;
  };
  auto finish = [&](int agent, int round, const GenerationRequest& req, GenerationResult res) {
    Trajectory t;
    t.agent_name = spec.agent_name(agent);
    t.agent_index = agent;
    t.round = round;
    t.tokens = std::move(res.tokens);
    t.text = std::move(res.text);
    t.duration_ms = res.duration_ms;
    t.prompt_chars = static_cast<std::int64_t>(req.system_prompt.size() + req.user_prompt.size());
    return t;
  };
  auto call = [&](int agent, int round) {
    const GenerationRequest req = prepare(agent, round);
    try {
      history.push_back(finish(agent, round, req, gateway.generate(req)));
    } catch (const Error& e) {
      throw SampleFailure(problem.id + ": " + spec.agent_name(agent) + " @ round " +
                              std::to_string(round) + ": " + e.what(),
                          history);
    }
  };

  const int workers = spec.orchestrator_index();
  for (int r = 1; r <= rounds; ++r) {
    if (spec.kind == Architecture::centralized && options.parallel_workers) {
      std::vector<GenerationRequest> reqs;
      for (int a = 0; a < workers; ++a) reqs.push_back(prepare(a, r));
      std::vector<std::future<GenerationResult>> futs;
      for (const auto& req : reqs) {
        futs.push_back(std::async(std::launch::async, [&gateway, &req] { return gateway.generate(req); }));
      }
      // Collect every future before reporting so no task outlives this frame.
      std::vector<std::optional<GenerationResult>> results(futs.size());
      std::optional<std::string> failure;
      for (std::size_t a = 0; a < futs.size(); ++a) {
        try {
          results[a] = futs[a].get();
        } catch (const Error& e) {
          if (!failure) failure = spec.agent_name(static_cast<int>(a)) + " @ round " + std::to_string(r) + ": " + e.what();
        }
      }
      for (std::size_t a = 0; a < results.size() && results[a]; ++a) {
        history.push_back(finish(static_cast<int>(a), r, reqs[a], std::move(*results[a])));
      }
      if (failure) throw SampleFailure(problem.id + ": " + *failure, history);
    } else {
      for (int a = 0; a < workers; ++a) call(a, r);
    }
    if (spec.orchestrator) call(spec.orchestrator_index(), r);
  }

  std::optional<ExtractedAnswer> answer;
  if (spec.decision == DecisionRule::majority_vote) {
    std::vector<std::optional<std::string>> votes;
    std::vector<const Trajectory*> last_round;
    for (const auto& t : history) {
      if (t.round != rounds) continue;
      auto a = extract_boxed(t.text, {}, problem.task_kind);
      votes.push_back(a ? std::optional<std::string>(a->normalized) : std::nullopt);
      last_round.push_back(&t);
    }
    if (auto winner = majority_vote(votes)) {
      for (std::size_t k = 0; k < votes.size(); ++k) {
        if (votes[k] == winner) {
          trace.final_text = last_round[k]->text;
          break;
        }
      }
    }
  } else if (auto idx = final_trajectory_index(trace)) {
    trace.final_text = history[*idx].text;
  }
  answer = extract_boxed(trace.final_text, {}, problem.task_kind);
  if (answer) trace.extracted_answer = answer->normalized;
  trace.is_finally_correct = problem.external_verdict
                                 ? *problem.external_verdict
                                 : grade(answer, problem.gold_answer, problem.task_kind);

  if (options.virtual_start_ms) {
    std::int64_t elapsed = 0;
    for (const auto& t : history) elapsed += t.duration_ms;
    trace.finished_at = trace.started_at + elapsed;
  } else {
    trace.finished_at = std::max(trace.started_at, now_utc_ms());
  }
  return trace;
}

std::optional<std::size_t> final_trajectory_index(const SampleTrace& trace) {
  const auto& ts = trace.trajectories;
  auto find = [&](int agent) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (ts[k].agent_index == agent && ts[k].round == trace.rounds) return k;
    }
    return std::nullopt;
  };
  switch (trace.architecture) {
    case Architecture::single:
      if (ts.empty()) return std::nullopt;
      return ts.size() - 1;
    case Architecture::sequential:
      return find(3);
    case Architecture::centralized:
    case Architecture::hybrid:
      return find(3);
    case Architecture::debate:
      if (trace.final_text.empty()) return std::nullopt;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        if (ts[k].round == trace.rounds && ts[k].text == trace.final_text) return k;
      }
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace masuq
