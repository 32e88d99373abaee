#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "masuq/feature_manifest.hpp"
#include "masuq/trace.hpp"

namespace masuq {

struct CliConfig {
  // Gateway: exactly one of endpoint / mock_script.
  std::string endpoint;
  std::string model = "default";
  std::string api_key_env = "MASUQ_API_KEY";
  int timeout_seconds = 600;
  int max_in_flight = 4;
  std::string mock_script;

  SamplingParams sampling;
  Architecture architecture = Architecture::single;
  int rounds = 2;
  std::string arch_spec;  // optional spec file overriding the shipped roster
  std::string dataset;
  std::string out_dir = "runs";
  int parallelism = 1;
  std::uint64_t seed = 0;
  FeatureGroup group = FeatureGroup::mas_only;
  int bins = 10;
  int folds = 5;
  std::int64_t virtual_start_ms = 0;  // mock runs only
  bool parallel_workers = false;

  /// Raises ConfigError naming the offending field.
  void validate() const;
};

/// Sets one key; raises ConfigError on an unknown key or a bad value.
void apply_config_value(CliConfig& config, std::string_view key, std::string_view value);

/// key = value lines, '#' comments. Relative mock_script, dataset and
/// arch_spec paths resolve against the file's directory.
void load_config_file(CliConfig& config, const std::filesystem::path& path);

}  // namespace masuq
