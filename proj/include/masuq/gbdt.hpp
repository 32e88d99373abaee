#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace masuq {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  Matrix select_rows(std::span<const std::size_t> idx) const;
};

/// Portable draws on top of mt19937_64 (std distributions differ across
/// standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n)
  double uniform01();                    // [0, 1) with 53 random bits
  double normal();                       // Box-Muller
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }
  /// k distinct values from [0, n), ascending.
  std::vector<std::size_t> sample(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

enum class GrowthPolicy { level_wise, leaf_wise };
enum class ClassWeighting { positive_ratio, balanced };

struct GbdtConfig {
  GrowthPolicy policy = GrowthPolicy::level_wise;
  int n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = 6;     // level-wise cap
  int num_leaves = 31;   // leaf-wise cap
  double subsample = 0.8;
  double colsample = 0.8;
  double reg_alpha = 0.1;
  double reg_lambda = 1.0;
  double min_child_weight = 1.0;  // hessian floor per child
  int min_data_in_leaf = 1;
  int early_stopping_rounds = 10;  // 0 disables
  double validation_fraction = 0.1;
  ClassWeighting weighting = ClassWeighting::positive_ratio;
  std::uint64_t seed = 0;

  static GbdtConfig level_wise(std::uint64_t seed);
  static GbdtConfig leaf_wise(std::uint64_t seed);
  nlohmann::json to_json() const;
  static GbdtConfig from_json(const nlohmann::json& j);
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;  // leaf output, already scaled by the learning rate
  double cover = 0;  // sum of weighted hessians reaching the node
  double gain = 0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// x[f] < threshold goes left; NaN goes left.
  double predict(std::span<const double> x) const;
  int depth() const;
  int leaf_count() const;
};

struct GbdtModel {
  GbdtConfig config;
  double base_score = 0;  // prior log-odds
  std::size_t n_features = 0;
  std::vector<Tree> trees;

  double margin(std::span<const double> x) const;
  double predict_proba(std::span<const double> x) const;
  /// Total split gain per feature.
  std::vector<double> gain_importance() const;

  nlohmann::json to_json() const;
  static GbdtModel from_json(const nlohmann::json& j);
};

/// Logistic-loss boosting. Raises DegenerateLabels for one-class or non-0/1
/// labels, NonFiniteInput for NaN/inf cells, DimensionMismatch for size errors.
GbdtModel train_gbdt(const Matrix& X, std::span<const int> y, const GbdtConfig& config);

double sigmoid(double z);

}  // namespace masuq
