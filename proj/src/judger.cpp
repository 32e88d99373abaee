#include "masuq/judger.hpp"

#include <cmath>
#include <fstream>

#include "masuq/error.hpp"
#include "masuq/stat_tests.hpp"

namespace masuq {
namespace {

using Json = nlohmann::json;

constexpr const char* kFormat = "masuq-judger-v1";

Json vec_json(const std::vector<double>& v) { return Json(v); }

}  // namespace

Standardizer Standardizer::fit(const Matrix& X) {
  if (X.rows == 0 || X.cols == 0) throw Error(Errc::EmptyMatrix, "cannot fit a standardizer on an empty matrix");
  Standardizer s;
  s.mean.assign(X.cols, 0.0);
  s.std.assign(X.cols, 0.0);
  for (std::size_t j = 0; j < X.cols; ++j) {
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < X.rows; ++i) {
      const double v = X(i, j);
      if (std::isnan(v)) continue;
      sum += v;
      ++n;
    }
    if (n == 0) continue;
    const double mu = sum / static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < X.rows; ++i) {
      const double v = X(i, j);
      if (!std::isnan(v)) ss += (v - mu) * (v - mu);
    }
    s.mean[j] = mu;
    s.std[j] = std::sqrt(ss / static_cast<double>(n));
  }
  return s;
}

std::vector<double> Standardizer::apply_row(std::span<const double> x) const {
  if (x.size() != mean.size()) {
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(mean.size()) + " features, got " +
                                             std::to_string(x.size()));
  }
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (std::isnan(x[j]) || std[j] < 1e-12) continue;
    out[j] = (x[j] - mean[j]) / std[j];
  }
  return out;
}

Matrix Standardizer::apply(const Matrix& X) const {
  Matrix out(X.rows, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto r = apply_row(X.row(i));
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

Json EnsembleModel::to_json() const {
  return Json{{"format", kFormat},
              {"manifest_version", manifest_version},
              {"group", group},
              {"feature_names", feature_names},
              {"standardizer", {{"mean", vec_json(standardizer.mean)}, {"std", vec_json(standardizer.std)}}},
              {"model_a", model_a.to_json()},
              {"model_b", model_b.to_json()}};
}

EnsembleModel EnsembleModel::from_json(const Json& j) {
  EnsembleModel m;
  try {
    if (j.at("format") != kFormat) throw Error(Errc::SchemaError, "unsupported model format");
    m.manifest_version = j.at("manifest_version");
    m.group = j.at("group");
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    m.standardizer.std = j.at("standardizer").at("std").get<std::vector<double>>();
    m.model_a = GbdtModel::from_json(j.at("model_a"));
    m.model_b = GbdtModel::from_json(j.at("model_b"));
  } catch (const Json::exception& e) {
    throw Error(Errc::SchemaError, std::string("model file: ") + e.what());
  }
  const std::size_t d = m.standardizer.mean.size();
  if (m.standardizer.std.size() != d || m.model_a.n_features != d || m.model_b.n_features != d) {
    throw Error(Errc::SchemaError, "model file: inconsistent feature dimensions");
  }
  return m;
}

void EnsembleModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write model " + path.string());
  out << to_json().dump(1) << '\n';
}

EnsembleModel EnsembleModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open model " + path.string());
  try {
    return from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw Error(Errc::SchemaError, path.string() + ": " + e.what());
  }
}

JudgerConfig JudgerConfig::defaults(std::uint64_t seed) {
  return JudgerConfig{GbdtConfig::level_wise(seed), GbdtConfig::leaf_wise(seed + 1)};
}

EnsembleModel train_ensemble(const Matrix& X, std::span<const int> y, const JudgerConfig& config) {
  EnsembleModel m;
  m.standardizer = Standardizer::fit(X);
  const Matrix Z = m.standardizer.apply(X);
  m.model_a = train_gbdt(Z, y, config.model_a);
  m.model_b = train_gbdt(Z, y, config.model_b);
  return m;
}

double average_probability(double margin_a, double margin_b) {
  return 0.5 * (sigmoid(margin_a) + sigmoid(margin_b));
}

double ensemble_predict(const EnsembleModel& model, std::span<const double> x) {
  const auto z = model.standardizer.apply_row(x);
  return average_probability(model.model_a.margin(z), model.model_b.margin(z));
}

std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(Errc::TooFewSamples, "need at least 2 folds");
  std::vector<int> fold_of(y.size(), -1);
  Rng rng(seed);
  std::size_t counter = 0;
  for (int c = 0; c <= 1; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) members.push_back(i);
    }
    if (members.size() < static_cast<std::size_t>(folds)) {
      throw Error(Errc::TooFewSamples, "class " + std::to_string(c) + " has " +
                                           std::to_string(members.size()) + " rows for " +
                                           std::to_string(folds) + " folds");
    }
    rng.shuffle(members);
    for (auto i : members) fold_of[i] = static_cast<int>(counter++ % static_cast<std::size_t>(folds));
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (fold_of[i] < 0) throw Error(Errc::DegenerateLabels, "labels must be 0 or 1");
  }
  return fold_of;
}

double accuracy_at_half(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size()) throw Error(Errc::LengthMismatch, "probabilities and labels differ in length");
  if (p.empty()) throw Error(Errc::EmptyInput, "no predictions");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hit += (p[i] >= 0.5 ? 1 : 0) == y[i];
  return static_cast<double>(hit) / static_cast<double>(p.size());
}

CvResult cross_validate(const Matrix& X, std::span<const int> y, int folds, std::uint64_t seed) {
  return cross_validate(X, y, folds, seed, JudgerConfig::defaults(seed));
}

CvResult cross_validate(const Matrix& X, std::span<const int> y, int folds, std::uint64_t seed,
                        const JudgerConfig& config) {
  if (X.rows != y.size()) throw Error(Errc::DimensionMismatch, "X rows and y length differ");
  CvResult res;
  res.fold_of = stratified_folds(y, folds, seed);
  res.oof_probability.assign(X.rows, 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < X.rows; ++i) (res.fold_of[i] == f ? te : tr).push_back(i);
    std::vector<int> ytr, yte;
    for (auto i : tr) ytr.push_back(y[i]);
    for (auto i : te) yte.push_back(y[i]);
    const EnsembleModel m = train_ensemble(X.select_rows(tr), ytr, config);
    std::vector<double> p;
    for (auto i : te) {
      p.push_back(ensemble_predict(m, X.row(i)));
      res.oof_probability[i] = p.back();
    }
    res.fold_accuracy.push_back(accuracy_at_half(p, yte));
  }
  double sum = 0;
  for (double a : res.fold_accuracy) sum += a;
  res.mean_accuracy = sum / folds;
  double ss = 0;
  for (double a : res.fold_accuracy) ss += (a - res.mean_accuracy) * (a - res.mean_accuracy);
  res.std_accuracy = std::sqrt(ss / folds);
  return res;
}

std::vector<double> min_max_normalize(std::span<const double> v) {
  std::vector<double> out(v.size(), 0.0);
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  if (range <= 0) return out;
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = (v[j] - *lo) / range;
  return out;
}

FeatureImportance importance_metrics(const EnsembleModel& model, const Matrix& X) {
  if (X.rows == 0) throw Error(Errc::EmptyMatrix, "importance needs at least one row");
  if (X.cols != model.dimension()) throw Error(Errc::DimensionMismatch, "matrix width differs from model");
  FeatureImportance out;
  out.normalized_a = min_max_normalize(model.model_a.gain_importance());
  out.normalized_b = min_max_normalize(model.model_b.gain_importance());
  const std::size_t d = X.cols;
  for (std::size_t j = 0; j < d; ++j) out.mean_importance.push_back(0.5 * (out.normalized_a[j] + out.normalized_b[j]));

  const Matrix Z = model.standardizer.apply(X);
  Matrix phi_a(X.rows, d), phi_b(X.rows, d);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto a = tree_attributions(model.model_a, Z.row(i));
    const auto b = tree_attributions(model.model_b, Z.row(i));
    std::copy(a.phi.begin(), a.phi.end(), phi_a.row(i).begin());
    std::copy(b.phi.begin(), b.phi.end(), phi_b.row(i).begin());
  }
  std::vector<double> xj(X.rows), pa(X.rows), pb(X.rows);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < X.rows; ++i) {
      xj[i] = Z(i, j);
      pa[i] = phi_a(i, j);
      pb[i] = phi_b(i, j);
    }
    out.shap_correlation.push_back(X.rows < 2 ? 0.0 : 0.5 * (pearson(xj, pa) + pearson(xj, pb)));
  }
  return out;
}

std::size_t argmax_first(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Selection pass_at_k_select(const EnsembleModel& model, const std::vector<std::vector<double>>& candidates) {
  if (candidates.empty()) throw Error(Errc::EmptyCandidates, "no candidates to select from");
  Selection s;
  for (const auto& c : candidates) s.probabilities.push_back(ensemble_predict(model, c));
  s.index = argmax_first(s.probabilities);
  return s;
}

}  // namespace masuq
