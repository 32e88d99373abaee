#include <gtest/gtest.h>

#include <random>

#include "masuq/verifier.hpp"

using namespace masuq;

namespace {

std::optional<std::string> boxed(std::string_view text) {
  auto a = extract_boxed(text);
  return a ? std::optional<std::string>(a->raw) : std::nullopt;
}

TokenRecord tok(std::string text) { return {std::move(text), 0.1, std::nullopt, std::nullopt}; }

}  // namespace

TEST(ExtractBoxed, LastBalancedOccurrence) {
  EXPECT_EQ(boxed("first \\boxed{1} then \\boxed{2}"), "2");
  EXPECT_EQ(boxed("\\boxed{\\frac{1}{2}}"), "\\frac{1}{2}");
  EXPECT_EQ(boxed("ok \\boxed{3} but \\boxed{unclosed"), "3");
  EXPECT_EQ(boxed("no answer here"), std::nullopt);
  EXPECT_EQ(boxed("\\boxed{}"), std::nullopt);
  EXPECT_EQ(boxed("\\boxed{  }"), std::nullopt);
}

TEST(ExtractBoxed, TokenSpanCoversAnswerTokens) {
  const std::vector<TokenRecord> ts{tok("The answer is "), tok("\\boxed{"), tok("1"), tok("2"), tok("}"), tok(".")};
  std::string text;
  for (const auto& t : ts) text += t.token_text;
  const auto a = extract_boxed(text, ts);
  ASSERT_TRUE(a && a->answer_token_span);
  EXPECT_EQ(a->answer_token_span->begin, 2u);
  EXPECT_EQ(a->answer_token_span->end, 4u);

  // A token that straddles the opening brace still overlaps the content.
  const std::vector<TokenRecord> ws{tok("\\boxed{4"), tok("2}")};
  const auto b = extract_boxed("\\boxed{42}", ws);
  ASSERT_TRUE(b && b->answer_token_span);
  EXPECT_EQ(b->answer_token_span->begin, 0u);
  EXPECT_EQ(b->answer_token_span->end, 2u);
  EXPECT_FALSE(extract_boxed("\\boxed{42}")->answer_token_span.has_value());
}

TEST(Normalize, MathForms) {
  EXPECT_EQ(normalize("\\frac{1}{2}", TaskKind::math), "1/2");
  EXPECT_EQ(normalize("\\dfrac{3}{6}", TaskKind::math), "1/2");
  EXPECT_EQ(normalize("0.5", TaskKind::math), "1/2");
  EXPECT_EQ(normalize("$42$", TaskKind::math), "42");
  EXPECT_EQ(normalize("1,000", TaskKind::math), "1000");
  EXPECT_EQ(normalize("  7 ", TaskKind::math), "7");
  EXPECT_EQ(normalize("-3.0", TaskKind::math), "-3");
  EXPECT_EQ(normalize("50\\%", TaskKind::math), "50");
  EXPECT_EQ(normalize("90^\\circ", TaskKind::math), "90");
  EXPECT_EQ(normalize("\\text{12}", TaskKind::math), "12");
  EXPECT_EQ(normalize("\\left(1, 2\\right)", TaskKind::math), "(1, 2)");
}

TEST(Normalize, MultipleChoice) {
  EXPECT_EQ(normalize("(B)", TaskKind::multiple_choice), "b");
  EXPECT_EQ(normalize("C.", TaskKind::multiple_choice), "c");
  EXPECT_TRUE(answers_match(normalize("(B) Paris", TaskKind::multiple_choice), "B", TaskKind::multiple_choice));
  EXPECT_TRUE(answers_match(normalize("b", TaskKind::multiple_choice), "(B) Paris", TaskKind::multiple_choice));
  EXPECT_FALSE(answers_match(normalize("A", TaskKind::multiple_choice), "B", TaskKind::multiple_choice));
}

TEST(Grade, MatchesEquivalentForms) {
  auto g = [](std::string_view text, std::string_view gold) {
    return grade(extract_boxed(text), gold, TaskKind::math);
  };
  EXPECT_TRUE(g("\\boxed{\\frac{2}{4}}", "0.5"));
  EXPECT_TRUE(g("\\boxed{1,234}", "1234"));
  EXPECT_TRUE(g("\\boxed{ 12 }", "12"));
  EXPECT_FALSE(g("\\boxed{13}", "12"));
  EXPECT_FALSE(grade(std::nullopt, "12", TaskKind::math));
  EXPECT_TRUE(g("\\boxed{x  +  1}", "x + 1"));
  EXPECT_TRUE(g("\\boxed{\\frac{-3}{4}}", "-0.75"));
}

TEST(Grade, NumericFuzz) {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<long> num(-50000, 50000), den(1, 40);
  for (int i = 0; i < 500; ++i) {
    const long p = num(gen), q = den(gen);
    const std::string frac = "\\frac{" + std::to_string(p * 3) + "}{" + std::to_string(q * 3) + "}";
    const std::string plain = std::to_string(p) + "/" + std::to_string(q);
    EXPECT_TRUE(answers_match(normalize(frac, TaskKind::math), plain, TaskKind::math)) << frac << " vs " << plain;
    EXPECT_TRUE(answers_match(normalize("$" + std::to_string(p) + "$", TaskKind::math), std::to_string(p) + ".000",
                              TaskKind::math));
    EXPECT_FALSE(answers_match(normalize(std::to_string(p), TaskKind::math), std::to_string(p + 1), TaskKind::math));
  }
}

TEST(Numeric, Classification) {
  EXPECT_TRUE(is_numeric_answer("12"));
  EXPECT_TRUE(is_numeric_answer("-1/2"));
  EXPECT_FALSE(is_numeric_answer("x+1"));
  EXPECT_FALSE(is_numeric_answer(""));
}

TEST(MajorityVote, PluralityAndTies) {
  using V = std::vector<std::optional<std::string>>;
  EXPECT_EQ(majority_vote(V{"4", "5", "4"}), "4");
  EXPECT_EQ(majority_vote(V{"5", "4"}), "5");  // tie: first seen
  EXPECT_EQ(majority_vote(V{std::nullopt, "3", std::nullopt}), "3");
  EXPECT_EQ(majority_vote(V{std::nullopt, std::nullopt}), std::nullopt);
  EXPECT_EQ(majority_vote(V{}), std::nullopt);
}
