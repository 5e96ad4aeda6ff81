#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "support.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/random.hpp"
#include "unlearn/text.hpp"

namespace unlearn {
namespace {

std::vector<std::string> random_tokens(Rng& rng, std::size_t max_len, std::uint64_t vocab) {
  std::vector<std::string> out(uniform_index(rng, max_len + 1));
  for (auto& t : out) t = "w" + std::to_string(uniform_index(rng, vocab));
  return out;
}

TEST(Lcs, AgreesWithOraclesOnRandomPairs) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_tokens(rng, 12, 5);
    const auto b = random_tokens(rng, 12, 5);
    const auto got = lcs_length(a, b);
    ASSERT_EQ(got, oracle::lcs_brute_force(a, b)) << "pair " << i;
    ASSERT_EQ(got, oracle::lcs_table(a, b)) << "pair " << i;
  }
}

TEST(RougeL, CatSatExample) {
  const auto s = rouge_l("the cat sat on the mat", "the cat lay on the mat");
  EXPECT_DOUBLE_EQ(s.precision, 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(s.recall, 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(s.f, 5.0 / 6.0);
}

TEST(RougeL, EdgeCases) {
  EXPECT_DOUBLE_EQ(rouge_l("", "abc").f, 0.0);
  EXPECT_DOUBLE_EQ(rouge_l("abc", "").f, 0.0);
  EXPECT_DOUBLE_EQ(rouge_l("Same Words!", "same words").f, 1.0);
  const auto s = rouge_l("a b", "a b c d");
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 0.5);
  EXPECT_DOUBLE_EQ(s.f, oracle::harmonic_mean(1.0, 0.5));
}

TEST(Cosine, ClosedForms) {
  EXPECT_NEAR(cosine_similarity({{1, 0}}, {{1, 1}}), 1.0 / std::sqrt(2.0), 1e-5);
  EXPECT_DOUBLE_EQ(cosine_similarity({{1, 2, 3}}, {{2, 4, 6}}), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity({{1, 0}}, {{-1, 0}}), -1.0);
  EXPECT_THROW(cosine_similarity({{1, 0}}, {{1, 0, 0}}), ValidationError);
  EXPECT_THROW(cosine_similarity({{0, 0}}, {{1, 0}}), ValidationError);
}

TEST(FScore, PublishedRows) {
  EXPECT_NEAR(f_score(0.0540, 0.7718), 0.8500, 1e-4);
  EXPECT_NEAR(f_score(0.1136, 0.6378), 0.7418, 1e-4);
}

TEST(FScore, DomainAndDegenerateCase) {
  EXPECT_DOUBLE_EQ(f_score(1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(f_score(0.0, 1.0), 1.0);
  EXPECT_THROW(f_score(-0.1, 0.5), ValidationError);
  EXPECT_THROW(f_score(0.5, 1.1), ValidationError);
  EXPECT_THROW(f_score(std::nan(""), 0.5), ValidationError);
}

// Property over a grid: decreasing in forget ROUGE, increasing in retain
// ROUGE, and equal to the harmonic-mean oracle.
TEST(FScore, GridMonotonicity) {
  constexpr int kSteps = 40;
  for (int i = 0; i <= kSteps; ++i) {
    for (int j = 0; j <= kSteps; ++j) {
      const double x = static_cast<double>(i) / kSteps;
      const double y = static_cast<double>(j) / kSteps;
      const double f = f_score(x, y);
      EXPECT_NEAR(f, oracle::harmonic_mean(1.0 - x, y), 1e-12);
      if (i < kSteps) EXPECT_GE(f, f_score(static_cast<double>(i + 1) / kSteps, y));
      if (j < kSteps) EXPECT_LE(f, f_score(x, static_cast<double>(j + 1) / kSteps));
    }
  }
}

TEST(McqAccuracy, CountsMatches) {
  EXPECT_DOUBLE_EQ(mcq_accuracy({0, 1, 2, 3}, {0, 1, 0, 0}), 0.5);
  EXPECT_THROW(mcq_accuracy({0}, {0, 1}), ValidationError);
  EXPECT_THROW(mcq_accuracy({}, {}), ValidationError);
}

TEST(Leaks, WholeNameOrAliasCaseInsensitive) {
  ForgetSet set;
  set.add(UnlearnTarget{"t1", "Hermione Granger", {"Hermione"}, 0});
  const ForgetSnapshot snap(set);
  EXPECT_TRUE(leaks("She met HERMIONE there.", snap));
  EXPECT_TRUE(leaks("hermione granger's wand", snap));
  EXPECT_FALSE(leaks("Hermioneish behaviour", snap));
  EXPECT_FALSE(leaks("Granger", snap));
  EXPECT_EQ(count_leaks({"Hermione", "nothing", "Hermione Granger and Hermione"}, snap), 2u);
}

// Property: adding a target can only add leaks.
TEST(Leaks, MonotoneInForgetSet) {
  const std::vector<std::string> responses = {"Alice met Bob", "Carol alone", "Dave and Erin",
                                              "nobody", "Bob again"};
  const std::vector<std::string> names = {"Bob", "Carol", "Zed", "Erin", "Alice"};
  ForgetSet set;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    set.add(UnlearnTarget{"t" + std::to_string(i), names[i], {}, 0});
    const auto n = count_leaks(responses, ForgetSnapshot(set));
    EXPECT_GE(n, prev);
    prev = n;
  }
  EXPECT_EQ(prev, 4u);
}

PipelineOutcome passthrough(std::string text) {
  PipelineOutcome o;
  o.final_text = text;
  o.trace.vanilla_text = text;
  return o;
}

TEST(FalsePositives, SuppressedOrAlteredUnrelatedAnswers) {
  std::vector<PipelineOutcome> batch;
  for (int i = 0; i < 100; ++i) {
    auto o = passthrough("answer " + std::to_string(i));
    if (i % 14 == 0 && i > 0) {
      o.final_text = "I am sorry, I cannot respond to that";
      o.is_null = true;
    }
    batch.push_back(o);
  }
  EXPECT_EQ(count_false_positives(batch), 7u);
  batch[1].final_text = "altered";
  EXPECT_EQ(count_false_positives(batch), 8u);
  EXPECT_THROW(count_false_positives(batch, false), ValidationError);
}

TEST(PrivacyJudge, PromptAndParsing) {
  const auto req = build_privacy_judge_prompt(Query{"q", {}}, "resp",
                                              testing::snapshot_of({"Hermione Granger"}), 10);
  EXPECT_DOUBLE_EQ(req.temperature, 0.0);
  const auto text = flatten(req);
  EXPECT_NE(text.find("Hermione Granger"), std::string::npos);
  EXPECT_NE(text.find("from 1 to 10"), std::string::npos);
  EXPECT_THROW(build_privacy_judge_prompt(Query{"q", {}}, "r", ForgetSnapshot{}, 7), ValidationError);

  EXPECT_DOUBLE_EQ(parse_privacy_score("9.5", 10), 9.5);
  EXPECT_DOUBLE_EQ(parse_privacy_score("Score: 4 out of 5"), 4.0);
  EXPECT_DOUBLE_EQ(parse_privacy_score("0 then 3", 5), 3.0);
  EXPECT_THROW(parse_privacy_score("9.5", 5), ParseError);
  EXPECT_THROW(parse_privacy_score("none"), ParseError);
}

}  // namespace
}  // namespace unlearn
