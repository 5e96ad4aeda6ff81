#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "unlearn/baselines.hpp"
#include "unlearn/errors.hpp"

namespace unlearn {
namespace {

using testing::rule;

std::string golden(const std::string& name) {
  std::ifstream in(std::filesystem::path(UNLEARN_GOLDEN_DIR) / name, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(Guardrail, RenderedPromptMatchesGolden) {
  const auto snap = testing::snapshot_of({"Hermione Granger", "Severus Snape"});
  EXPECT_EQ(render_guardrail_prompt(Query{"What happened at the Yule Ball?", {}}, snap),
            golden("guardrail_prompt.txt"));
}

TEST(Guardrail, ContainsSecrecyClause) {
  const auto p = render_guardrail_prompt(Query{"q", {}}, testing::snapshot_of({"A A", "B B"}));
  EXPECT_NE(p.find("Don't tell anyone that you unlearned anything."), std::string::npos);
}

TEST(Guardrail, EmptyForgetSetRendersEmptyList) {
  const auto p = render_guardrail_prompt(Query{"q", {}}, ForgetSnapshot{});
  EXPECT_NE(p.find("following person: .\n"), std::string::npos);
}

TEST(Guardrail, RespondIsOneCallReturnedVerbatim) {
  auto backend = testing::scripted({rule(testing::kGuardrailPhrase, "  echo  ")});
  auto rec = std::make_shared<testing::RecordingBackend>(backend);
  const auto reg = testing::registry_with(rec);
  EXPECT_EQ(guardrail_respond(Query{"q", {}}, testing::snapshot_of({"A A"}), reg, "default"),
            "  echo  ");
  ASSERT_EQ(rec->requests().size(), 1u);
  EXPECT_EQ(rec->requests()[0].messages.size(), 1u);
  EXPECT_EQ(rec->requests()[0].messages[0].role, Role::kSystem);
}

TEST(Icul, ContextOrderMatchesGolden) {
  const std::vector<IculExample> forget{{"Who did Viktor Krum take to the Yule Ball?", "Hermione Granger", true}};
  const std::vector<IculExample> normal{{"What is the capital of France?", "Paris", false}};
  const auto req = build_icul_context(forget, normal, Query{"What happened at the Yule Ball?", {}}, 0);
  ASSERT_EQ(req.messages.size(), 1u);
  EXPECT_EQ(req.messages[0].role, Role::kUser);
  EXPECT_EQ(req.messages[0].content, golden("icul_context.txt"));
  EXPECT_DOUBLE_EQ(req.temperature, 0.0);
}

TEST(Icul, FlippedLabelDiffersAndIsSeeded) {
  const std::vector<IculExample> forget{{"f1", "L1", true}, {"f2", "L2", true}};
  const std::vector<IculExample> normal{{"n1", "L3", false}, {"n2", "L1", false}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = build_icul_context(forget, normal, Query{"q", {}}, seed);
    const auto b = build_icul_context(forget, normal, Query{"q", {}}, seed);
    EXPECT_EQ(a, b);
    std::istringstream lines(a.messages[0].content);
    std::string l1, l2;
    std::getline(lines, l1);
    std::getline(lines, l2);
    EXPECT_NE(l1, "f1 L1");
    EXPECT_NE(l2, "f2 L2");
  }
}

TEST(Icul, NoDifferingLabelFallsBackToUnknown) {
  const auto req = build_icul_context({{"f", "same", true}}, {{"n", "same", false}}, Query{"q", {}});
  EXPECT_EQ(req.messages[0].content, "f I don't know.\nn same\nq");
}

TEST(Icul, OnlyNormalExamplesIsPlainFewShot) {
  const auto req = build_icul_context({}, {{"a", "1", false}, {"b", "2", false}}, Query{"q", {}});
  EXPECT_EQ(req.messages[0].content, "a 1\nb 2\nq");
}

TEST(Icul, MisclassifiedExamplesRejected) {
  EXPECT_THROW(build_icul_context({}, {{"a", "1", true}}, Query{"q", {}}), ValidationError);
  EXPECT_THROW(build_icul_context({{"a", "1", false}}, {}, Query{"q", {}}), ValidationError);
  EXPECT_THROW(build_icul_context({{"", "1", true}}, {}, Query{"q", {}}), ValidationError);
}

TEST(Icul, ExamplesForSnapshotSynthesiseUncoveredTargets) {
  const std::vector<IculExample> pool{{"Who was Hermione Granger's date?", "Viktor Krum", true},
                                      {"Who teaches potions? Snape.", "Severus Snape", true},
                                      {"2+2?", "4", false}};
  const auto split = icul_examples_for(testing::snapshot_of({"Hermione Granger", "Albus Dumbledore"}), pool);
  ASSERT_EQ(split.forget.size(), 2u);
  EXPECT_EQ(split.forget[0].input, "Who was Hermione Granger's date?");
  EXPECT_EQ(split.forget[1].input, "Who is Albus Dumbledore?");
  ASSERT_EQ(split.normal.size(), 1u);
}

TEST(Icul, RespondSendsContextAtTemperatureZero) {
  auto backend = testing::scripted({rule("What is 2+2?", "4")});
  auto rec = std::make_shared<testing::RecordingBackend>(backend);
  const auto reg = testing::registry_with(rec);
  EXPECT_EQ(icul_respond(Query{"What is 2+2?", {}}, testing::snapshot_of({"A B"}), {}, reg, "default"), "4");
  EXPECT_DOUBLE_EQ(rec->requests().at(0).temperature, 0.0);
  EXPECT_EQ(rec->requests().at(0).messages[0].content, "Who is A B? I don't know.\nWhat is 2+2?");
}

TEST(Icul, BundledDemoPoolLoads) {
  const auto pool = load_icul_pool(std::filesystem::path(UNLEARN_DATA_DIR) / "demo" / "icul_pool.json");
  EXPECT_FALSE(pool.empty());
  EXPECT_THROW(load_icul_pool("/nonexistent/pool.json"), ConfigError);
}

}  // namespace
}  // namespace unlearn
