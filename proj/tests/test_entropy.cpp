#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "masuq/entropy_stats.hpp"
#include "masuq/error.hpp"

using namespace masuq;

TEST(TokenEntropy, KnownDistributions) {
  EXPECT_NEAR(token_entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}), std::log(4.0), 1e-15);
  EXPECT_EQ(token_entropy(std::vector<double>{1.0, 0.0, 0.0}), 0.0);
  EXPECT_NEAR(token_entropy(std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-15);
  // -0.9 ln 0.9 - 0.1 ln 0.1
  EXPECT_NEAR(token_entropy(std::vector<double>{0.9, 0.1}), 0.3250829733914482, 1e-15);
}

TEST(TokenEntropy, RejectsNonDistributions) {
  try {
    token_entropy(std::vector<double>{0.7, 0.7});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonDistribution);
  }
  EXPECT_THROW(token_entropy(std::vector<double>{1.2, -0.2}), Error);
  EXPECT_THROW(token_entropy(std::vector<double>{}), Error);
}

TEST(TokenEntropy, BoundedByLogVocabulary) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(2 + t % 30);
    double z = 0;
    for (auto& v : p) z += (v = u(gen));
    for (auto& v : p) v /= z;
    const double h = token_entropy(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(p.size())) + 1e-12);
  }
}

TEST(TruncatedEntropy, SingleHalfMassIsTwoOutcomes) {
  const std::vector<std::pair<std::string, double>> one{{"a", std::log(0.5)}};
  EXPECT_NEAR(entropy_from_truncated_logprobs(one), std::log(2.0), 1e-15);
}

TEST(TruncatedEntropy, LowerBoundsTheFullEntropy) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.01, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(10);
    double z = 0;
    for (auto& v : p) z += (v = u(gen));
    for (auto& v : p) v /= z;
    std::sort(p.rbegin(), p.rend());
    const double full = token_entropy(p);
    for (std::size_t k = 1; k <= p.size(); ++k) {
      std::vector<double> lps;
      for (std::size_t i = 0; i < k; ++i) lps.push_back(std::log(p[i]));
      const double h = entropy_from_truncated_logprobs(std::span<const double>(lps));
      EXPECT_LE(h, full + 1e-12) << "k=" << k;
    }
  }
}

TEST(TruncatedEntropy, EmptyListIsError) {
  EXPECT_THROW(entropy_from_truncated_logprobs(std::span<const double>{}), Error);
}

TEST(Describe, MatchesHandValues) {
  const std::vector<double> v{4, 1, 3, 2};
  const StatSummary s = describe(v);
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.total, 10);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 1.25);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.max, 4);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.q1, 1.75);
  EXPECT_DOUBLE_EQ(s.q3, 3.25);
}

TEST(Describe, EmptyAndSingleton) {
  EXPECT_EQ(describe(std::vector<double>{}), StatSummary{});
  const StatSummary one = describe(std::vector<double>{0.7});
  EXPECT_DOUBLE_EQ(one.median, 0.7);
  EXPECT_DOUBLE_EQ(one.q1, 0.7);
  EXPECT_DOUBLE_EQ(one.std, 0);
}

TEST(Describe, ScalingLaw) {
  const std::vector<double> v{0.3, 1.7, 0.2, 2.9, 0.0, 1.1};
  std::vector<double> w;
  for (double x : v) w.push_back(2 * x);
  const StatSummary a = describe(v), b = describe(w);
  EXPECT_DOUBLE_EQ(b.total, 2 * a.total);
  EXPECT_DOUBLE_EQ(b.std, 2 * a.std);
  EXPECT_DOUBLE_EQ(b.variance, 4 * a.variance);
  EXPECT_DOUBLE_EQ(b.q3, 2 * a.q3);
  EXPECT_NEAR(shape(b).stability_index, shape(a).stability_index, 1e-15);
  EXPECT_NEAR(shape(b).bowley_skewness, shape(a).bowley_skewness, 1e-15);
}

TEST(Shape, HandValues) {
  const ShapeMetrics m = shape(describe(std::vector<double>{1, 2, 3, 10}));
  // q1 1.75, median 2.5, q3 4.75
  EXPECT_DOUBLE_EQ(m.range, 9);
  EXPECT_DOUBLE_EQ(m.iqr, 3);
  EXPECT_DOUBLE_EQ(m.bowley_skewness, (4.75 + 1.75 - 5.0) / 3);
  EXPECT_DOUBLE_EQ(m.tail_weight, (10 - 4.75) / 3);
  const double sd = std::sqrt(((1 - 4.0) * (1 - 4.0) + 4 + 1 + 36) / 4);
  EXPECT_DOUBLE_EQ(m.cv, sd / 4);
  EXPECT_DOUBLE_EQ(m.stability_index, 1 - sd / 4);
}

TEST(Shape, DegenerateDenominatorsZeroFill) {
  const ShapeMetrics flat = shape(describe(std::vector<double>{2, 2, 2}));
  EXPECT_EQ(flat.iqr, 0);
  EXPECT_EQ(flat.bowley_skewness, 0);
  EXPECT_EQ(flat.tail_weight, 0);
  EXPECT_EQ(flat.cv, 0);
  EXPECT_EQ(flat.stability_index, 1);
  const ShapeMetrics zero_mean = shape(describe(std::vector<double>{-1, 1}));
  EXPECT_EQ(zero_mean.cv, 0);
  EXPECT_THROW(shape(StatSummary{}), Error);
}
