#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "masuq/llm_gateway.hpp"

namespace masuq {

struct HttpGatewayConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model = "default";
  std::string api_key;  // sent as a bearer token when non-empty
  int timeout_seconds = 600;
  int attempts = 3;
  std::vector<int> backoff_ms = {100, 400, 1600};
};

/// Client for chat-completion servers that return per-token top-k logprobs.
class HttpGateway : public Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpGateway(HttpGatewayConfig config, Sleeper sleeper = {});
  GenerationResult generate(const GenerationRequest& request) override;
  std::string describe() const override { return config_.base_url + "#" + config_.model; }

  /// Last attempt count for the most recent generate call (for tests).
  int last_attempts() const { return last_attempts_.load(); }

 private:
  HttpGatewayConfig config_;
  Sleeper sleeper_;
  std::string host_;
  std::string path_;
  std::atomic<std::uint64_t> next_id_{0};
  std::atomic<int> last_attempts_{0};
};

/// Request body for a chat-completion call with logprobs enabled.
nlohmann::json chat_request_body(const GenerationRequest& request, const std::string& model);

/// Converts a chat-completion response into a GenerationResult; token entropy
/// comes from each token's top-k list. Throws Errc::Protocol when content or
/// logprobs are missing.
GenerationResult parse_chat_response(const nlohmann::json& body, const std::string& correlation_id);

}  // namespace masuq
