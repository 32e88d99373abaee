#include <gtest/gtest.h>

#include <limits>
#include <map>
#include <random>
#include <unordered_map>

#include "masuq/error.hpp"
#include "masuq/features.hpp"
#include "support.hpp"

using namespace masuq;
namespace mt = masuq::testing;

namespace {

std::map<std::string, double> as_map(const std::vector<std::pair<std::string, double>>& v) {
  return {v.begin(), v.end()};
}

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

}  // namespace

TEST(FeatureManifest, DimensionsForTwoRounds) {
  const auto m = manifest_for_rounds(2);
  EXPECT_EQ(m.dimension(FeatureGroup::mas_only), 224u);
  EXPECT_EQ(m.dimension(FeatureGroup::base_h), 241u);
  EXPECT_EQ(m.dimension(FeatureGroup::base_full), 245u);
  EXPECT_EQ(m.count(FeatureCategory::base_entropy), 17u);
  EXPECT_EQ(m.count(FeatureCategory::base_correctness), 4u);
  EXPECT_EQ(m.identifier_count(), 9u);
  EXPECT_EQ(m.index_of("no_such_feature"), std::string::npos);
}

TEST(FeatureManifest, GrowsLinearlyInRounds) {
  std::vector<std::size_t> d;
  for (int r = 1; r <= 5; ++r) {
    const auto m = manifest_for_rounds(r);
    d.push_back(m.dimension(FeatureGroup::mas_only));
    EXPECT_EQ(m.dimension(FeatureGroup::base_full), d.back() + 21);
    EXPECT_NE(manifest_version(r), manifest_version(r == 1 ? 2 : 1));
    // names are unique
    auto names = m.names(FeatureGroup::base_full);
    std::sort(names.begin(), names.end());
    EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
  }
  for (std::size_t i = 2; i < d.size(); ++i) EXPECT_EQ(d[i] - d[i - 1], d[1] - d[0]);
}

TEST(Features, MatchOracleAcrossRounds) {
  std::mt19937_64 gen(91);
  for (int i = 0; i < 60; ++i) {
    const int R = 1 + i % 3;
    const Architecture arch = i % 2 ? Architecture::debate : Architecture::sequential;
    const auto mas = mt::scripted_trace(gen, arch, R, "q" + std::to_string(i));
    const auto base = mt::scripted_trace(gen, Architecture::single, 1, mas.problem_id);
    const auto got = as_map(compute_features(mas, &base, manifest_for_rounds(R)));
    const auto want = mt::oracle::features(mas, &base);
    ASSERT_EQ(got.size(), want.size());
    for (const auto& [name, v] : want) {
      ASSERT_TRUE(got.contains(name)) << name;
      EXPECT_NEAR(got.at(name), v, 1e-10) << name << " trace " << i;
    }
  }
}

TEST(Features, ScalingEntropiesByTwo) {
  std::mt19937_64 gen(3);
  const auto s = mt::scripted_trace(gen, Architecture::debate, 2, "x");
  auto doubled = s;
  for (auto& t : doubled.trajectories) {
    for (auto& tok : t.tokens) tok.entropy *= 2;
  }
  const auto m = manifest_for_rounds(2);
  const auto a = as_map(compute_features(s, nullptr, m));
  const auto b = as_map(compute_features(doubled, nullptr, m));
  for (const char* n : {"sample_total_entropy", "round_1_total_entropy", "sample_mean_entropy",
                        "sample_max_trajectory_entropy", "system_experiment_total_entropy"}) {
    EXPECT_NEAR(b.at(n), 2 * a.at(n), 1e-9) << n;
  }
  for (const char* n : {"sample_variance_trajectory_entropy", "sample_round_1_max_agent_variance_entropy"}) {
    if (!a.contains(n)) continue;
    EXPECT_NEAR(b.at(n), 4 * a.at(n), 1e-9) << n;
  }
  for (const char* n : {"sample_entropy_cv", "sample_entropy_bowley_skewness", "round_1_2_ratio_entropy",
                        "total_token_count", "answer_token_count", "total_reasoning_time_ms"}) {
    EXPECT_NEAR(b.at(n), a.at(n), 1e-9) << n;
  }
}

TEST(Features, BaseColumnsZeroWithoutBase) {
  std::mt19937_64 gen(4);
  const auto s = mt::scripted_trace(gen, Architecture::single, 2, "x");
  const auto m = manifest_for_rounds(2);
  const auto v = as_map(compute_features(s, nullptr, m));
  EXPECT_EQ(v.at("base_sample_total_entropy"), 0.0);
  EXPECT_EQ(v.at("base_model_is_correct"), 0.0);
  EXPECT_EQ(extract(s, nullptr, m, FeatureGroup::mas_only).values.size(), 224u);
}

TEST(Features, Errors) {
  std::mt19937_64 gen(5);
  const auto s = mt::scripted_trace(gen, Architecture::debate, 2, "x");
  const auto base = mt::scripted_trace(gen, Architecture::single, 1, "x");
  const auto m2 = manifest_for_rounds(2);
  EXPECT_EQ(code_of([&] { extract(s, nullptr, m2, FeatureGroup::base_h); }), Errc::MissingBaseTrace);
  EXPECT_EQ(code_of([&] { extract(s, &base, manifest_for_rounds(3), FeatureGroup::mas_only); }),
            Errc::ManifestMismatch);
  // a multi-round trace cannot act as the base
  EXPECT_EQ(code_of([&] { extract(s, &s, m2, FeatureGroup::base_full); }), Errc::ManifestMismatch);
  auto bad = s;
  bad.trajectories[0].tokens.at(0).entropy = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { compute_features(bad, nullptr, m2); }), Errc::NonFiniteInput);
}

TEST(Features, ExtractRunPairsByProblem) {
  std::mt19937_64 gen(6);
  TraceFile mas, base;
  mas.manifest.rounds = 2;
  base.manifest.rounds = 1;
  for (int i = 0; i < 4; ++i) mas.samples.push_back(mt::scripted_trace(gen, Architecture::debate, 2, "p" + std::to_string(i)));
  for (int i : {2, 0, 3}) base.samples.push_back(mt::scripted_trace(gen, Architecture::single, 1, "p" + std::to_string(i)));
  const auto m = extract_run(mas, &base, FeatureGroup::base_full);
  ASSERT_EQ(m.rows.size(), 3u);
  EXPECT_EQ(m.rows[0].problem_id, "p0");
  EXPECT_EQ(m.rows[1].problem_id, "p2");
  EXPECT_EQ(m.rows[2].problem_id, "p3");
  ASSERT_EQ(m.unpaired.size(), 1u);
  EXPECT_NE(m.unpaired[0].find("p1"), std::string::npos);
  EXPECT_EQ(m.dimension(), 245u);
  EXPECT_EQ(m.rows[1].label, mas.samples[2].is_finally_correct ? 1 : 0);
  EXPECT_EQ(extract_run(mas, nullptr, FeatureGroup::mas_only).rows.size(), 4u);
}

TEST(FeatureCsv, RoundTripIsExact) {
  mt::TempDir dir;
  std::mt19937_64 gen(8);
  TraceFile mas;
  mas.manifest.rounds = 2;
  for (int i = 0; i < 5; ++i) mas.samples.push_back(mt::scripted_trace(gen, Architecture::debate, 2, "p" + std::to_string(i)));
  const auto m = extract_run(mas, nullptr, FeatureGroup::mas_only);
  write_feature_csv(dir / "m.csv", m);
  const auto back = read_feature_csv(dir / "m.csv");
  EXPECT_EQ(back.names, m.names);
  EXPECT_EQ(back.manifest_version, m.manifest_version);
  EXPECT_EQ(back.group, FeatureGroup::mas_only);
  ASSERT_EQ(back.rows.size(), m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].values, m.rows[i].values);
    EXPECT_EQ(back.rows[i].sample_key(), m.rows[i].sample_key());
    EXPECT_EQ(back.rows[i].label, m.rows[i].label);
  }
}

TEST(FeatureCsv, FormatDoubleRoundTrips) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen) / (1 + i);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(FeatureCsv, SchemaErrorsNameTheLine) {
  mt::TempDir dir;
  auto msg = [&](const std::string& content) {
    mt::write_file(dir / "bad.csv", content);
    try {
      read_feature_csv(dir / "bad.csv");
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::SchemaError);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(msg("a,b\n").find(":1:"), std::string::npos);
  EXPECT_NE(msg("a,sample_key,label\n1,r/p,1\nx,r/p,0\n").find(":3: bad number"), std::string::npos);
  EXPECT_NE(msg("a,sample_key,label\n1,r/p,1\n1,r/p\n").find(":3:"), std::string::npos);
  EXPECT_NE(msg("a,sample_key,label\n1,r/p,2\n").find(":2: label"), std::string::npos);
  EXPECT_NE(msg("a,sample_key,label\n1,rp,1\n").find(":2: sample_key"), std::string::npos);
  EXPECT_EQ(code_of([&] { read_feature_csv(dir / "missing.csv"); }), Errc::IoError);
}
