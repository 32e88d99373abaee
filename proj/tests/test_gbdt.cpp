#include <gtest/gtest.h>

#include <cmath>

#include "masuq/error.hpp"
#include "masuq/gbdt.hpp"
#include "support.hpp"

using namespace masuq;
namespace mt = masuq::testing;

namespace {

double train_accuracy(const GbdtModel& m, const Matrix& X, const std::vector<int>& y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < X.rows; ++i) ok += (m.predict_proba(X.row(i)) >= 0.5) == (y[i] == 1);
  return static_cast<double>(ok) / static_cast<double>(X.rows);
}

Errc train_error(const Matrix& X, const std::vector<int>& y) {
  try {
    train_gbdt(X, y, GbdtConfig::level_wise(0));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "training succeeded";
  return Errc::Degenerate;
}

}  // namespace

TEST(Rng, DeterministicAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.below(7);
    EXPECT_EQ(x, b.below(7));
    EXPECT_LT(x, 7u);
    const double u = a.uniform01();
    EXPECT_EQ(u, b.uniform01());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  const auto s = a.sample(100, 10);
  ASSERT_EQ(s.size(), 10u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
}

TEST(Rng, NormalMoments) {
  Rng r(1);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(Gbdt, SeparableDataIsLearned) {
  const auto task = mt::make_synthetic(400, 6, 2);
  for (const auto& cfg : {GbdtConfig::level_wise(3), GbdtConfig::leaf_wise(4)}) {
    const auto m = train_gbdt(task.X, task.y, cfg);
    EXPECT_EQ(train_accuracy(m, task.X, task.y), 1.0);
    EXPECT_EQ(m.n_features, 6u);
  }
}

TEST(Gbdt, NoiseLabelsStayNearChance) {
  Rng r(9);
  Matrix X(600, 4);
  std::vector<int> y(600);
  for (std::size_t i = 0; i < 600; ++i) {
    for (std::size_t j = 0; j < 4; ++j) X(i, j) = r.normal();
    y[i] = static_cast<int>(r.below(2));
  }
  const auto m = train_gbdt(X, y, GbdtConfig::level_wise(1));
  // fresh draws from the same noise distribution
  std::size_t ok = 0;
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> x(4);
    for (auto& v : x) v = r.normal();
    ok += (m.predict_proba(x) >= 0.5) == (r.below(2) == 1);
  }
  EXPECT_NEAR(static_cast<double>(ok) / 2000.0, 0.5, 0.05);
}

TEST(Gbdt, DeterministicForFixedSeed) {
  const auto task = mt::make_synthetic(300, 5, 4);
  const auto a = train_gbdt(task.X, task.y, GbdtConfig::leaf_wise(11));
  const auto b = train_gbdt(task.X, task.y, GbdtConfig::leaf_wise(11));
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Gbdt, JsonRoundTripPreservesPredictions) {
  const auto task = mt::make_synthetic(200, 5, 5);
  const auto m = train_gbdt(task.X, task.y, GbdtConfig::level_wise(2));
  const auto back = GbdtModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  ASSERT_EQ(back.trees.size(), m.trees.size());
  for (std::size_t i = 0; i < task.X.rows; ++i) EXPECT_EQ(back.margin(task.X.row(i)), m.margin(task.X.row(i)));
  EXPECT_EQ(back.config.to_json(), m.config.to_json());
}

TEST(Gbdt, ShapeCapsAreRespected) {
  const auto task = mt::make_synthetic(500, 8, 6);
  auto level = GbdtConfig::level_wise(1);
  level.max_depth = 3;
  level.early_stopping_rounds = 0;
  level.n_estimators = 20;
  const auto a = train_gbdt(task.X, task.y, level);
  EXPECT_EQ(a.trees.size(), 20u);
  for (const auto& t : a.trees) EXPECT_LE(t.depth(), 3);

  auto leaf = GbdtConfig::leaf_wise(1);
  leaf.num_leaves = 5;
  leaf.n_estimators = 30;
  const auto b = train_gbdt(task.X, task.y, leaf);
  EXPECT_LE(b.trees.size(), 30u);
  for (const auto& t : b.trees) EXPECT_LE(t.leaf_count(), 5);
}

TEST(Gbdt, EarlyStoppingHaltsOnNoise) {
  Rng r(8);
  Matrix X(400, 3);
  std::vector<int> y(400);
  for (std::size_t i = 0; i < 400; ++i) {
    for (std::size_t j = 0; j < 3; ++j) X(i, j) = r.normal();
    y[i] = static_cast<int>(r.below(2));
  }
  auto cfg = GbdtConfig::level_wise(5);
  cfg.n_estimators = 200;
  cfg.early_stopping_rounds = 3;
  const auto m = train_gbdt(X, y, cfg);
  EXPECT_GE(m.trees.size(), 1u);
  EXPECT_LT(m.trees.size(), 200u);
}

TEST(Gbdt, GainImportanceFavoursInformativeColumns) {
  const auto task = mt::make_synthetic(500, 10, 7);
  const auto m = train_gbdt(task.X, task.y, GbdtConfig::level_wise(0));
  const auto g = m.gain_importance();
  ASSERT_EQ(g.size(), 10u);
  const double informative = g[0] + g[1] + g[2];
  double rest = 0;
  for (std::size_t j = 3; j < g.size(); ++j) rest += g[j];
  EXPECT_GT(informative, rest);
}

TEST(Gbdt, NanGoesLeft) {
  Tree t;
  t.nodes = {{0, 0.5, 1, 2, 0, 2, 1}, {-1, 0, -1, -1, -1.0, 1, 0}, {-1, 0, -1, -1, 1.0, 1, 0}};
  const double nan = std::nan("");
  EXPECT_EQ(t.predict(std::vector<double>{nan}), -1.0);
  EXPECT_EQ(t.predict(std::vector<double>{0.2}), -1.0);
  EXPECT_EQ(t.predict(std::vector<double>{0.5}), 1.0);
  EXPECT_EQ(t.depth(), 1);
  EXPECT_EQ(t.leaf_count(), 2);
}

TEST(Gbdt, InputErrors) {
  Matrix X(4, 2, 1.0);
  EXPECT_EQ(train_error(X, {1, 1, 1, 1}), Errc::DegenerateLabels);
  EXPECT_EQ(train_error(X, {0, 1, 2, 0}), Errc::DegenerateLabels);
  EXPECT_EQ(train_error(X, {0, 1, 0}), Errc::DimensionMismatch);
  Matrix bad = X;
  bad(2, 1) = std::nan("");
  EXPECT_EQ(train_error(bad, {0, 1, 0, 1}), Errc::NonFiniteInput);
  bad(2, 1) = INFINITY;
  EXPECT_EQ(train_error(bad, {0, 1, 0, 1}), Errc::NonFiniteInput);
}

TEST(Gbdt, SigmoidIsStable) {
  EXPECT_EQ(sigmoid(0), 0.5);
  EXPECT_NEAR(sigmoid(800), 1.0, 1e-300);
  EXPECT_GE(sigmoid(-800), 0.0);
  EXPECT_NEAR(sigmoid(2) + sigmoid(-2), 1.0, 1e-15);
}
