#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "masuq/gbdt.hpp"
#include "masuq/tree_shap.hpp"

namespace masuq {

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;  // population; columns below 1e-12 map to 0

  /// NaN cells are ignored when fitting. Raises EmptyMatrix.
  static Standardizer fit(const Matrix& X);
  /// (x - mean) / std; zero-variance columns and NaN cells become 0.
  Matrix apply(const Matrix& X) const;
  std::vector<double> apply_row(std::span<const double> x) const;
};

struct EnsembleModel {
  Standardizer standardizer;
  GbdtModel model_a;  // level-wise
  GbdtModel model_b;  // leaf-wise
  std::string manifest_version;
  std::string group;
  std::vector<std::string> feature_names;

  std::size_t dimension() const { return standardizer.mean.size(); }

  nlohmann::json to_json() const;
  static EnsembleModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static EnsembleModel load(const std::filesystem::path& path);
};

struct JudgerConfig {
  GbdtConfig model_a = GbdtConfig::level_wise(0);
  GbdtConfig model_b = GbdtConfig::leaf_wise(1);

  /// Shipped hyperparameters; model_b is seeded with seed + 1.
  static JudgerConfig defaults(std::uint64_t seed);
};

/// Fits the standardizer on X, then both boosters on the standardized matrix.
EnsembleModel train_ensemble(const Matrix& X, std::span<const int> y, const JudgerConfig& config);

/// Mean of the two sub-model probabilities on the raw (unstandardized) row.
double ensemble_predict(const EnsembleModel& model, std::span<const double> x);

/// Mean of sigmoid(margin_a) and sigmoid(margin_b).
double average_probability(double margin_a, double margin_b);

/// Fold id per row: seeded per-class shuffle, then round-robin with the
/// counter carried across classes. Raises TooFewSamples.
std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed);

struct CvResult {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0;
  double std_accuracy = 0;  // population std over folds
  std::vector<int> fold_of;
  std::vector<double> oof_probability;  // held-out prediction per row
};

CvResult cross_validate(const Matrix& X, std::span<const int> y, int folds, std::uint64_t seed);
CvResult cross_validate(const Matrix& X, std::span<const int> y, int folds, std::uint64_t seed,
                        const JudgerConfig& config);

double accuracy_at_half(std::span<const double> probabilities, std::span<const int> y);

struct FeatureImportance {
  std::vector<double> normalized_a;
  std::vector<double> normalized_b;
  std::vector<double> mean_importance;   // I-bar
  std::vector<double> shap_correlation;  // rho
};

/// Min-max to [0,1]; a constant vector maps to all zeros.
std::vector<double> min_max_normalize(std::span<const double> v);

/// Raises EmptyMatrix.
FeatureImportance importance_metrics(const EnsembleModel& model, const Matrix& X);

struct Selection {
  std::size_t index = 0;
  std::vector<double> probabilities;
};

/// First index of the maximum.
std::size_t argmax_first(std::span<const double> v);

/// Raises EmptyCandidates, DimensionMismatch.
Selection pass_at_k_select(const EnsembleModel& model, const std::vector<std::vector<double>>& candidates);

}  // namespace masuq
