#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "masuq/error.hpp"
#include "masuq/trace.hpp"

namespace masuq {

struct GenerationRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.6;
  double top_p = 0.95;
  int max_tokens = 8192;
  int logprob_k = 20;
};

enum class FinishReason { stop, length, error };
std::string_view to_string(FinishReason reason);

struct GenerationResult {
  std::string text;
  std::vector<TokenRecord> tokens;
  std::int64_t duration_ms = 0;
  FinishReason finish_reason = FinishReason::stop;

  bool operator==(const GenerationResult&) const = default;
};

/// Gateway failure tagged with the request correlation id.
class GatewayError : public Error {
 public:
  GatewayError(Errc code, std::string correlation_id, const std::string& what)
      : Error(code, "[" + correlation_id + "] " + what), correlation_id_(std::move(correlation_id)) {}
  const std::string& correlation_id() const noexcept { return correlation_id_; }

 private:
  std::string correlation_id_;
};

/// A token-producing model. Implementations must be callable concurrently.
class Gateway {
 public:
  virtual ~Gateway() = default;
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
  /// Descriptor recorded in run manifests.
  virtual std::string describe() const = 0;
  /// True when durations are scripted rather than measured.
  virtual bool deterministic_timing() const { return false; }
};

/// Decorator counting generate calls; used to check call-count laws.
class CountingGateway : public Gateway {
 public:
  explicit CountingGateway(Gateway& inner) : inner_(inner) {}
  GenerationResult generate(const GenerationRequest& request) override {
    ++calls_;
    return inner_.generate(request);
  }
  std::string describe() const override { return inner_.describe(); }
  bool deterministic_timing() const override { return inner_.deterministic_timing(); }
  int calls() const { return calls_.load(); }

 private:
  Gateway& inner_;
  std::atomic<int> calls_{0};
};

/// Bounds in-flight requests to the wrapped gateway.
class BoundedGateway : public Gateway {
 public:
  BoundedGateway(Gateway& inner, int max_in_flight = 4);
  GenerationResult generate(const GenerationRequest& request) override;
  std::string describe() const override { return inner_.describe(); }
  bool deterministic_timing() const override { return inner_.deterministic_timing(); }

 private:
  Gateway& inner_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace masuq
