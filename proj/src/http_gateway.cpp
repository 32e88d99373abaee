#include "masuq/http_gateway.hpp"

#include <algorithm>
#include <map>
#include <thread>

#include "httplib.h"
#include "masuq/entropy_stats.hpp"

namespace masuq {
namespace {

using Json = nlohmann::json;

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

Json chat_request_body(const GenerationRequest& request, const std::string& model) {
  Json messages = Json::array();
  if (!request.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  return Json{{"model", model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"top_p", request.top_p},
              {"max_tokens", request.max_tokens},
              {"logprobs", true},
              {"top_logprobs", request.logprob_k},
              {"stream", false}};
}

GenerationResult parse_chat_response(const Json& body, const std::string& id) {
  auto protocol = [&](const std::string& msg) { return GatewayError(Errc::Protocol, id, msg); };
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty()) {
    throw protocol("response has no choices");
  }
  const Json& choice = body["choices"][0];
  const Json* content = nullptr;
  if (auto lp = choice.find("logprobs"); lp != choice.end() && lp->is_object()) {
    if (auto c = lp->find("content"); c != lp->end() && c->is_array()) content = &*c;
  }
  if (content == nullptr || content->empty()) throw protocol("response carries no logprobs");

  GenerationResult result;
  for (std::size_t i = 0; i < content->size(); ++i) {
    const Json& item = (*content)[i];
    if (!item.contains("token") || !item["token"].is_string()) {
      throw protocol("logprob entry " + std::to_string(i) + " lacks a token");
    }
    auto top = item.find("top_logprobs");
    if (top == item.end() || !top->is_array() || top->empty()) {
      throw protocol("logprob entry " + std::to_string(i) + " lacks top_logprobs");
    }
    // Deduplicate by token text, keep the best logprob, sort descending.
    std::map<std::string, double> best;
    for (const Json& alt : *top) {
      if (!alt.contains("token") || !alt.contains("logprob") || !alt["logprob"].is_number()) {
        throw protocol("malformed top_logprobs entry");
      }
      const auto tok = alt["token"].get<std::string>();
      const double lp = std::min(alt["logprob"].get<double>(), 0.0);
      auto [it, inserted] = best.emplace(tok, lp);
      if (!inserted) it->second = std::max(it->second, lp);
    }
    TopLogprobs list(best.begin(), best.end());
    std::stable_sort(list.begin(), list.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    TokenRecord rec;
    rec.token_text = item["token"].get<std::string>();
    rec.entropy = entropy_from_truncated_logprobs(std::span<const std::pair<std::string, double>>(list));
    rec.truncation_k = static_cast<int>(list.size());
    rec.top_logprobs = std::move(list);
    result.text += rec.token_text;
    result.tokens.push_back(std::move(rec));
  }
  const std::string finish = choice.value("finish_reason", std::string("stop"));
  result.finish_reason = finish == "length" ? FinishReason::length : FinishReason::stop;
  return result;
}

HttpGateway::HttpGateway(HttpGatewayConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  // Split "scheme://host:port/prefix" into host part and path prefix.
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  host_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  if (prefix.size() < 3 || prefix.substr(prefix.size() - 3) != "/v1") prefix += "/v1";
  path_ = prefix + "/chat/completions";
}

GenerationResult HttpGateway::generate(const GenerationRequest& request) {
  const std::string id = "req-" + std::to_string(next_id_.fetch_add(1) + 1);
  const std::string body = chat_request_body(request, config_.model).dump();
  httplib::Headers headers{{"X-Request-Id", id}};
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const int attempts = std::max(1, config_.attempts);
  std::string last_error;
  Errc last_code = Errc::Transport;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    last_attempts_ = attempt;
    const auto start = std::chrono::steady_clock::now();
    httplib::Client client(host_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(std::chrono::seconds(config_.timeout_seconds));
    client.set_write_timeout(std::chrono::seconds(config_.timeout_seconds));
    auto res = client.Post(path_, headers, body, "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    bool retry = false;
    if (!res) {
      last_code = Errc::Transport;
      last_error = "transport failure: " + httplib::to_string(res.error());
      retry = true;
    } else if (res->status < 200 || res->status >= 300) {
      last_code = Errc::ServerRefused;
      last_error = "server returned HTTP " + std::to_string(res->status);
      if (!retryable_status(res->status)) throw GatewayError(Errc::ServerRefused, id, last_error);
      retry = true;
    } else {
      Json parsed;
      try {
        parsed = Json::parse(res->body);
      } catch (const Json::parse_error& e) {
        throw GatewayError(Errc::Protocol, id, std::string("malformed JSON body: ") + e.what());
      }
      GenerationResult result = parse_chat_response(parsed, id);
      result.duration_ms = elapsed;
      return result;
    }
    if (retry && attempt < attempts) {
      const auto idx = static_cast<std::size_t>(attempt - 1);
      const int wait = idx < config_.backoff_ms.size() ? config_.backoff_ms[idx]
                                                       : config_.backoff_ms.back();
      sleeper_(std::chrono::milliseconds(wait));
    }
  }
  throw GatewayError(last_code, id,
                     last_error + " after " + std::to_string(attempts) + " attempts");
}

}  // namespace masuq
