#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "masuq/error.hpp"
#include "masuq/judger.hpp"
#include "support.hpp"

using namespace masuq;
namespace mt = masuq::testing;

namespace {

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Degenerate;
}

const mt::SyntheticTask& task() {
  static const auto t = mt::make_synthetic(240, 6, 13);
  return t;
}

const EnsembleModel& trained() {
  static const auto m = train_ensemble(task().X, task().y, JudgerConfig::defaults(3));
  return m;
}

}  // namespace

TEST(Standardizer, PopulationMomentsAndConstantColumns) {
  const auto X = Matrix::from_rows({{1, 5, 2}, {3, 5, 4}, {5, 5, std::nan("")}});
  const auto s = Standardizer::fit(X);
  EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
  EXPECT_DOUBLE_EQ(s.std[0], std::sqrt(8.0 / 3.0));
  EXPECT_DOUBLE_EQ(s.mean[2], 3.0);  // NaN ignored
  const auto Z = s.apply(X);
  EXPECT_DOUBLE_EQ(Z(0, 0), -2.0 / std::sqrt(8.0 / 3.0));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(Z(i, 1), 0.0);
  EXPECT_EQ(Z(2, 2), 0.0);
  EXPECT_EQ(code_of([] { Standardizer::fit(Matrix()); }), Errc::EmptyMatrix);
  EXPECT_EQ(code_of([&] { s.apply_row(std::vector<double>{1, 2}); }), Errc::DimensionMismatch);
}

TEST(Judger, AverageProbability) {
  EXPECT_EQ(average_probability(0, 0), 0.5);
  EXPECT_NEAR(average_probability(std::log(0.2 / 0.8), std::log(0.8 / 0.2)), 0.5, 1e-15);
  EXPECT_NEAR(average_probability(std::log(3.0), std::log(3.0)), 0.75, 1e-15);
}

TEST(Judger, StratifiedFolds) {
  std::vector<int> y;
  for (int i = 0; i < 103; ++i) y.push_back(i % 3 == 0);
  for (int k : {2, 5, 7}) {
    const auto f = stratified_folds(y, k, 8);
    EXPECT_EQ(f, stratified_folds(y, k, 8));
    std::vector<int> pos(k, 0), neg(k, 0), all(k, 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      ASSERT_GE(f[i], 0);
      ASSERT_LT(f[i], k);
      (y[i] ? pos : neg)[f[i]]++;
      all[f[i]]++;
    }
    for (const auto* v : {&pos, &neg, &all}) {
      const auto [lo, hi] = std::minmax_element(v->begin(), v->end());
      EXPECT_LE(*hi - *lo, 1) << "k=" << k;
    }
  }
  EXPECT_NE(stratified_folds(y, 5, 8), stratified_folds(y, 5, 9));
  EXPECT_EQ(code_of([&] { stratified_folds(std::vector<int>{0, 0, 1, 0}, 2, 0); }), Errc::TooFewSamples);
  EXPECT_EQ(code_of([&] { stratified_folds(y, 1, 0); }), Errc::TooFewSamples);
}

TEST(Judger, CrossValidationIsDeterministic) {
  const auto a = cross_validate(task().X, task().y, 4, 2);
  const auto b = cross_validate(task().X, task().y, 4, 2);
  EXPECT_EQ(a.fold_accuracy, b.fold_accuracy);
  EXPECT_EQ(a.oof_probability, b.oof_probability);
  ASSERT_EQ(a.fold_accuracy.size(), 4u);
  const double mean = std::accumulate(a.fold_accuracy.begin(), a.fold_accuracy.end(), 0.0) / 4;
  double ss = 0;
  for (double x : a.fold_accuracy) ss += (x - mean) * (x - mean);
  EXPECT_DOUBLE_EQ(a.mean_accuracy, mean);
  EXPECT_DOUBLE_EQ(a.std_accuracy, std::sqrt(ss / 4));
  EXPECT_GE(a.mean_accuracy, 0.95);
}

TEST(Judger, SaveLoadKeepsPredictions) {
  mt::TempDir dir;
  auto m = trained();
  m.manifest_version = "v-test";
  m.group = "mas";
  m.feature_names = {"a", "b", "c", "d", "e", "f"};
  m.save(dir / "model.json");
  const auto back = EnsembleModel::load(dir / "model.json");
  EXPECT_EQ(back.manifest_version, "v-test");
  EXPECT_EQ(back.feature_names, m.feature_names);
  for (std::size_t i = 0; i < task().X.rows; ++i) {
    EXPECT_EQ(ensemble_predict(back, task().X.row(i)), ensemble_predict(m, task().X.row(i)));
  }
  EXPECT_EQ(code_of([&] { EnsembleModel::load(dir / "absent.json"); }), Errc::IoError);
}

TEST(Judger, MinMaxAndArgmax) {
  EXPECT_EQ(min_max_normalize(std::vector<double>{3, 3, 3}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(min_max_normalize(std::vector<double>{2, 4, 3}), (std::vector<double>{0, 1, 0.5}));
  EXPECT_TRUE(min_max_normalize(std::vector<double>{}).empty());
  EXPECT_EQ(argmax_first(std::vector<double>{0.2, 0.9, 0.9, 0.1}), 1u);
  EXPECT_EQ(argmax_first(std::vector<double>{0.5}), 0u);
}

TEST(Judger, ImportanceRanksInformativeColumns) {
  const auto imp = importance_metrics(trained(), task().X);
  ASSERT_EQ(imp.mean_importance.size(), 6u);
  for (double v : imp.mean_importance) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const double top = *std::max_element(imp.mean_importance.begin(), imp.mean_importance.end());
  EXPECT_DOUBLE_EQ(top, std::max({imp.mean_importance[0], imp.mean_importance[1], imp.mean_importance[2]}));
  // x0 pushes toward the negative class, x1 toward the positive one
  EXPECT_LT(imp.shap_correlation[0], 0.0);
  EXPECT_GT(imp.shap_correlation[1], 0.0);
  EXPECT_EQ(code_of([&] { importance_metrics(trained(), Matrix(0, 6)); }), Errc::EmptyMatrix);
  EXPECT_EQ(code_of([&] { importance_metrics(trained(), Matrix(2, 5)); }), Errc::DimensionMismatch);
}

TEST(Judger, PassAtKSelection) {
  const auto& m = trained();
  std::vector<std::vector<double>> cands;
  for (std::size_t i : {0u, 1u, 2u, 3u}) {
    const auto r = task().X.row(i);
    cands.emplace_back(r.begin(), r.end());
  }
  const auto s = pass_at_k_select(m, cands);
  ASSERT_EQ(s.probabilities.size(), 4u);
  EXPECT_EQ(s.index, argmax_first(s.probabilities));
  // the chosen row is a positive one when the candidates include one
  EXPECT_EQ(task().y[s.index], 1);
  // reordering the candidates selects the same row
  std::vector<std::vector<double>> rev(cands.rbegin(), cands.rend());
  const auto t = pass_at_k_select(m, rev);
  if (std::count(s.probabilities.begin(), s.probabilities.end(), s.probabilities[s.index]) == 1) {
    EXPECT_EQ(rev[t.index], cands[s.index]);
  }
  EXPECT_EQ(code_of([&] { pass_at_k_select(m, {}); }), Errc::EmptyCandidates);
  EXPECT_EQ(code_of([&] { pass_at_k_select(m, {{1.0, 2.0}}); }), Errc::DimensionMismatch);
}

TEST(Judger, AccuracyAtHalf) {
  EXPECT_DOUBLE_EQ(accuracy_at_half(std::vector<double>{0.5, 0.49, 0.9}, std::vector<int>{1, 0, 0}), 2.0 / 3.0);
  EXPECT_EQ(code_of([] { accuracy_at_half(std::vector<double>{0.5}, std::vector<int>{}); }), Errc::LengthMismatch);
}
