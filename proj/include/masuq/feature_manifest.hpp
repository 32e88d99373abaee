#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace masuq {

enum class FeatureCategory {
  agent_level,
  round_level,
  sample_level,
  system_level,
  base_entropy,
  computational,
  base_correctness,
};
std::string_view to_string(FeatureCategory c);

enum class FeatureGroup { mas_only, base_h, base_full };
std::string_view to_string(FeatureGroup g);
FeatureGroup parse_feature_group(std::string_view text);  // "mas" | "base-h" | "base-full"

struct FeatureEntry {
  std::string name;
  FeatureCategory category = FeatureCategory::agent_level;
  std::string generator;    // formula family, e.g. "agg(max)/stat(total)/round(1)"
  bool identifier = false;  // bookkeeping column, never trainable
};

struct FeatureManifest {
  std::string version;
  int rounds = 2;
  std::vector<FeatureEntry> entries;  // every column, identifiers included

  /// Indices into `entries` of the trainable columns for a group, in order.
  std::vector<std::size_t> selection(FeatureGroup group) const;
  std::vector<std::string> names(FeatureGroup group) const;
  std::size_t dimension(FeatureGroup group) const { return selection(group).size(); }
  std::size_t count(FeatureCategory c) const;
  std::size_t identifier_count() const;
  std::size_t index_of(std::string_view name) const;  // npos when absent

  nlohmann::json to_json() const;
};

/// Canonical manifest for traces with R rounds (1..5). R = 2 gives 224/241/245.
FeatureManifest manifest_for_rounds(int rounds);

std::string manifest_version(int rounds);

}  // namespace masuq
