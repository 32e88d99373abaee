#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "masuq/feature_manifest.hpp"
#include "masuq/trace.hpp"
#include "masuq/trace_io.hpp"

namespace masuq {

struct FeatureRow {
  std::string run_id;
  std::string problem_id;
  std::vector<double> values;
  int label = 0;

  std::string sample_key() const { return run_id + "/" + problem_id; }
};

/// Every trainable column of the manifest, in manifest order. Base columns
/// are zero when base is null.
std::vector<std::pair<std::string, double>> compute_features(const SampleTrace& trace,
                                                             const SampleTrace* base,
                                                             const FeatureManifest& manifest);

/// Raises MissingBaseTrace when the group needs a base trace and none is
/// given, ManifestMismatch when the trace's R differs from the manifest's.
FeatureRow extract(const SampleTrace& trace, const SampleTrace* base,
                   const FeatureManifest& manifest, FeatureGroup group);

struct FeatureMatrix {
  std::string manifest_version;
  FeatureGroup group = FeatureGroup::mas_only;
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;
  std::vector<std::string> unpaired;  // one line per skipped sample

  std::size_t dimension() const { return names.size(); }
};

/// One row per sample summary in input order; base traces pair by problem_id.
FeatureMatrix extract_run(const TraceFile& traces, const TraceFile* base, FeatureGroup group);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

/// CSV with header; last two columns are sample_key and label. A sidecar
/// `<path>.manifest.json` records the manifest version and group.
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& matrix);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

}  // namespace masuq
