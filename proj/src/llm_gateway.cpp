#include "masuq/llm_gateway.hpp"

namespace masuq {

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

BoundedGateway::BoundedGateway(Gateway& inner, int max_in_flight)
    : inner_(inner), slots_(std::max(1, std::min(max_in_flight, 1024))) {}

GenerationResult BoundedGateway::generate(const GenerationRequest& request) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_.generate(request);
}

}  // namespace masuq
