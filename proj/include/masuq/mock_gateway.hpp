#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "masuq/llm_gateway.hpp"

namespace masuq {

struct MockToken {
  std::string text;
  std::vector<double> probs;  // full distribution over the script vocabulary
};

struct MockRule {
  std::string name;
  // Every listed substring must occur in the corresponding prompt.
  std::vector<std::string> system_contains;
  std::vector<std::string> user_contains;
  std::vector<MockToken> tokens;
  std::int64_t duration_ms = 10;

  bool is_catch_all() const { return system_contains.empty() && user_contains.empty(); }
  bool matches(const GenerationRequest& request) const;
};

struct MockScript {
  std::vector<std::string> vocabulary;
  std::vector<MockRule> rules;
  // Test mode sets this false so unmatched requests fail loudly.
  bool require_catch_all = true;

  /// Throws Errc::SchemaError on a malformed or invalid script.
  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::filesystem::path& path);
  void validate() const;
};

/// First matching rule wins; entropy is computed exactly from the rule's
/// full vectors.
GenerationResult generate_mock(const MockScript& script, const GenerationRequest& request);

class MockGateway : public Gateway {
 public:
  explicit MockGateway(MockScript script, std::string source = "inline");
  GenerationResult generate(const GenerationRequest& request) override {
    return generate_mock(script_, request);
  }
  std::string describe() const override { return "mock:" + source_; }
  bool deterministic_timing() const override { return true; }
  const MockScript& script() const { return script_; }

 private:
  MockScript script_;
  std::string source_;
};

}  // namespace masuq
