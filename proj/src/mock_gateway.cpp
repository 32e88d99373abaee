#include "masuq/mock_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "masuq/entropy_stats.hpp"
#include "masuq/error.hpp"

namespace masuq {
namespace {

using Json = nlohmann::json;

// Expands the shorthand distributions to a full vector over the vocabulary.
std::vector<double> expand_dist(const Json& tok, std::size_t vocab, const std::string& where) {
  if (auto it = tok.find("probs"); it != tok.end()) return it->get<std::vector<double>>();
  const Json dist = tok.value("dist", Json("one_hot"));
  std::vector<double> p(vocab, 0.0);
  if (vocab == 0) throw Error(Errc::SchemaError, where + ": empty vocabulary");
  if (dist.is_string() && dist == "one_hot") {
    p[0] = 1.0;
  } else if (dist.is_string() && dist == "uniform") {
    for (auto& v : p) v = 1.0 / static_cast<double>(vocab);
  } else if (dist.is_object() && dist.contains("peak")) {
    const double peak = dist["peak"].get<double>();
    p[0] = peak;
    if (vocab > 1) {
      for (std::size_t i = 1; i < vocab; ++i) p[i] = (1.0 - peak) / static_cast<double>(vocab - 1);
    }
  } else {
    throw Error(Errc::SchemaError, where + ": unknown dist shorthand " + dist.dump());
  }
  return p;
}

}  // namespace

bool MockRule::matches(const GenerationRequest& request) const {
  for (const auto& s : system_contains) {
    if (request.system_prompt.find(s) == std::string::npos) return false;
  }
  for (const auto& s : user_contains) {
    if (request.user_prompt.find(s) == std::string::npos) return false;
  }
  return true;
}

MockScript MockScript::from_json(const Json& j) {
  MockScript script;
  try {
    script.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    script.require_catch_all = j.value("require_catch_all", true);
    const auto& rules = j.at("rules");
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto& jr = rules[r];
      MockRule rule;
      rule.name = jr.value("name", "rule_" + std::to_string(r));
      rule.system_contains = jr.value("system_contains", std::vector<std::string>{});
      rule.user_contains = jr.value("user_contains", std::vector<std::string>{});
      rule.duration_ms = jr.value("duration_ms", std::int64_t{10});
      for (std::size_t k = 0; k < jr.at("tokens").size(); ++k) {
        const auto& jt = jr["tokens"][k];
        const std::string where = "rule '" + rule.name + "' token " + std::to_string(k);
        rule.tokens.push_back({jt.at("text").get<std::string>(),
                               expand_dist(jt, script.vocabulary.size(), where)});
      }
      script.rules.push_back(std::move(rule));
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::SchemaError, std::string("mock script: ") + e.what());
  }
  script.validate();
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open mock script " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::SchemaError, path.string() + ": " + e.what());
  }
  return from_json(j);
}

void MockScript::validate() const {
  if (vocabulary.empty()) throw Error(Errc::SchemaError, "mock script: empty vocabulary");
  if (rules.empty()) throw Error(Errc::SchemaError, "mock script: no rules");
  if (require_catch_all && !rules.back().is_catch_all()) {
    throw Error(Errc::SchemaError, "mock script: last rule must be a catch-all");
  }
  for (const auto& rule : rules) {
    if (rule.tokens.empty()) {
      throw Error(Errc::SchemaError, "mock script: rule '" + rule.name + "' emits no tokens");
    }
    if (rule.duration_ms < 0) {
      throw Error(Errc::SchemaError, "mock script: rule '" + rule.name + "' negative duration");
    }
    for (const auto& tok : rule.tokens) {
      if (tok.probs.size() != vocabulary.size()) {
        throw Error(Errc::SchemaError, "mock script: rule '" + rule.name +
                                           "' vector length differs from vocabulary size");
      }
      double sum = 0;
      for (double p : tok.probs) {
        if (!(p >= 0)) {
          throw Error(Errc::SchemaError, "mock script: rule '" + rule.name + "' negative prob");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(Errc::SchemaError,
                    "mock script: rule '" + rule.name + "' vector does not sum to 1");
      }
    }
  }
}

GenerationResult generate_mock(const MockScript& script, const GenerationRequest& request) {
  for (const auto& rule : script.rules) {
    if (!rule.matches(request)) continue;
    GenerationResult result;
    result.duration_ms = rule.duration_ms;
    const std::size_t limit =
        std::min(rule.tokens.size(), static_cast<std::size_t>(std::max(request.max_tokens, 1)));
    for (std::size_t i = 0; i < limit; ++i) {
      const auto& tok = rule.tokens[i];
      TokenRecord rec;
      rec.token_text = tok.text;
      rec.entropy = token_entropy(tok.probs);
      result.text += tok.text;
      result.tokens.push_back(std::move(rec));
    }
    result.finish_reason = limit < rule.tokens.size() ? FinishReason::length : FinishReason::stop;
    return result;
  }
  throw Error(Errc::NoMatchingRule, "no mock rule matches the request");
}

MockGateway::MockGateway(MockScript script, std::string source)
    : script_(std::move(script)), source_(std::move(source)) {
  script_.validate();
}

}  // namespace masuq
