#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "unlearn/core.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/random.hpp"
#include "unlearn/serialization.hpp"
#include "unlearn/text.hpp"

namespace unlearn {
namespace {

TEST(Text, TokenizeLowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(text::tokenize("Hermione's date, Viktor Krum!"),
            (std::vector<std::string>{"hermione", "s", "date", "viktor", "krum"}));
  EXPECT_TRUE(text::tokenize("  ... ").empty());
}

TEST(Text, TokenizeKeepsUtf8WordsWhole) {
  EXPECT_EQ(text::tokenize("Café au-lait"), (std::vector<std::string>{"café", "au", "lait"}));
}

TEST(Text, TokenSequenceNeedsWholeTokens) {
  const auto hay = text::tokenize("Ron Weasley and Hermione Granger");
  EXPECT_TRUE(text::contains_token_sequence(hay, text::tokenize("hermione granger")));
  EXPECT_FALSE(text::contains_token_sequence(hay, text::tokenize("Herm")));
  EXPECT_FALSE(text::contains_token_sequence(hay, {}));
}

TEST(Text, Fnv1aKnownVectors) {
  EXPECT_EQ(text::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(text::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(text::fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Random, UniformIndexStaysInRangeAndCoversIt) {
  Rng rng(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = uniform_index(rng, 7);
    ASSERT_LT(x, 7u);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Random, SeededShuffleIsAPermutationAndDeterministic) {
  std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8}, b = a;
  Rng r1(42), r2(42);
  seeded_shuffle(a, r1);
  seeded_shuffle(b, r2);
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8}));
}

UnlearnTarget target(std::string id, std::string name, std::vector<std::string> aliases = {}) {
  return UnlearnTarget{std::move(id), std::move(name), std::move(aliases), 0};
}

TEST(ForgetSet, AddAndRemoveBumpVersionByOne) {
  ForgetSet set;
  EXPECT_EQ(set.version(), 0u);
  set.add(target("t1", "Hermione Granger", {"Hermione"}));
  EXPECT_EQ(set.version(), 1u);
  set.add(target("t2", "Severus Snape"));
  EXPECT_EQ(set.version(), 2u);
  EXPECT_EQ(set.remove("t1").canonical_name, "Hermione Granger");
  EXPECT_EQ(set.version(), 3u);
  EXPECT_EQ(set.size(), 1u);
}

TEST(ForgetSet, DuplicateNameRejectedWithoutVersionChange) {
  ForgetSet set;
  set.add(target("t1", "Hermione Granger", {"Hermione"}));
  EXPECT_THROW(set.add(target("t2", "hermione granger")), DuplicateError);
  EXPECT_THROW(set.add(target("t3", "Someone", {"HERMIONE"})), DuplicateError);
  EXPECT_THROW(set.add(target("t1", "Other Person")), DuplicateError);
  EXPECT_EQ(set.version(), 1u);
  EXPECT_EQ(set.size(), 1u);
}

TEST(ForgetSet, InvalidTargetsRejected) {
  ForgetSet set;
  EXPECT_THROW(set.add(target("t1", "   ")), ValidationError);
  EXPECT_THROW(set.add(target("", "Name")), ValidationError);
  EXPECT_THROW(set.add(target("t1", "Name", {"name"})), ValidationError);
  EXPECT_THROW(set.add(target("t1", "Name", {"A", "a"})), ValidationError);
  EXPECT_EQ(set.version(), 0u);
}

TEST(ForgetSet, RemoveUnknownLeavesVersion) {
  ForgetSet set;
  set.add(target("t1", "A B"));
  EXPECT_THROW(set.remove("nope"), NotFoundError);
  EXPECT_EQ(set.version(), 1u);
}

TEST(ForgetSet, FindByNameMatchesAliasesCaseInsensitively) {
  ForgetSet set;
  set.add(target("t1", "Severus Snape", {"Half-Blood Prince"}));
  ASSERT_NE(set.find_by_name("half-blood PRINCE"), nullptr);
  EXPECT_EQ(set.find_by_name("half-blood PRINCE")->id, "t1");
  EXPECT_EQ(set.find_by_name("Snape"), nullptr);
}

TEST(ForgetSnapshot, IsIsolatedFromLaterMutation) {
  ForgetSet set;
  set.add(target("t1", "A B"));
  ForgetSnapshot snap(set);
  set.add(target("t2", "C D"));
  EXPECT_EQ(snap.size(), 1u);
  EXPECT_EQ(snap.version(), 1u);
}

TEST(CriticRating, AggregateIsMinimum) {
  const auto r = make_rating(1, {{"a", 4}, {"b", 2}});
  EXPECT_EQ(r.aggregate, 2);
  EXPECT_THROW(make_rating(1, {}), ValidationError);
  EXPECT_THROW(make_rating(1, {{"a", 6}}), ValidationError);
  EXPECT_THROW(make_rating(1, {{"a", 0}}), ValidationError);
}

TEST(PipelineConfig, ValidationBounds) {
  PipelineConfig c;
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.k, 5);
  EXPECT_EQ(c.j, 3);
  EXPECT_DOUBLE_EQ(c.threshold, 4.0);
  EXPECT_EQ(c.null_response, "I am sorry, I cannot respond to that");
  c.k = 0;
  EXPECT_THROW(validate(c), ValidationError);
  c.k = 3;
  c.j = 4;
  EXPECT_THROW(validate(c), ValidationError);
  c.j = 3;
  c.threshold = 5.5;
  EXPECT_THROW(validate(c), ValidationError);
}

TEST(Query, BlankTextRejected) {
  EXPECT_THROW(validate(Query{" \n", {}}), ValidationError);
  EXPECT_NO_THROW(validate(Query{"What is 2+2?", {}}));
}

TEST(McqItem, AnswerIndexRange) {
  McqItem item{"chemistry", "Q?", {"a", "b", "c", "d"}, 4};
  EXPECT_THROW(validate(item), ValidationError);
  item.answer_index = 3;
  EXPECT_NO_THROW(validate(item));
}

template <typename T>
T round_trip(const T& v) {
  return Json::parse(Json(v).dump()).get<T>();
}

// Property: decode(encode(x)) == x over a seeded sample of populated values.
TEST(Serialization, RoundTripProperty) {
  Rng rng(2024);
  auto word = [&] { return "w" + std::to_string(uniform_index(rng, 1000)); };
  for (int iter = 0; iter < 100; ++iter) {
    ForgetSet set;
    const auto n = uniform_index(rng, 5);
    for (std::uint64_t i = 0; i < n; ++i) {
      set.add(UnlearnTarget{"id" + std::to_string(i), "Name " + std::to_string(iter * 10 + i),
                            {"Alias " + std::to_string(iter * 10 + i)},
                            static_cast<Timestamp>(uniform_index(rng, 1u << 30))});
    }
    EXPECT_EQ(round_trip(set), set);
    EXPECT_EQ(round_trip(ForgetSnapshot(set)), ForgetSnapshot(set));

    PipelineConfig cfg;
    cfg.k = 1 + static_cast<int>(uniform_index(rng, 10));
    cfg.j = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.k)));
    cfg.threshold = 1.0 + static_cast<double>(uniform_index(rng, 400)) / 100.0;
    cfg.random_seed = rng();
    cfg.skip_vanilla = iter % 2 == 0;
    cfg.prompt_overrides[Agent::kCritic] = word();
    cfg.backend_routes[Agent::kComposer] = word();
    EXPECT_EQ(round_trip(cfg), cfg);

    PipelineOutcome o;
    o.final_text = word();
    o.is_null = iter % 3 == 0;
    o.trace.stages = {"vanilla", "audit_detect", "audit_erase"};
    o.trace.vanilla_text = word();
    o.trace.variants.push_back(SanitizedVariant{1, word(), DetectedTargets{{"id0"}}});
    o.trace.variant_failures.push_back(VariantFailure{2, word()});
    o.trace.ratings.push_back(make_rating(1, {{"id0", 4}}));
    o.trace.rating_errors.push_back(RatingError{1, "id0", word(), word()});
    o.trace.mean_score = 4.5;
    o.trace.backend_calls = static_cast<int>(uniform_index(rng, 50));
    o.timings.push_back({"vanilla", 1.25});
    EXPECT_EQ(round_trip(o), o);

    McqItem item{word(), word(), {word(), word(), word(), word()},
                 static_cast<int>(uniform_index(rng, 4))};
    EXPECT_EQ(round_trip(item), item);

    Query q{word(), {{Role::kSystem, word()}, {Role::kAssistant, word()}}};
    EXPECT_EQ(round_trip(q), q);

    MetricReport report;
    report.f_score = 0.5;
    report.leak_count = iter;
    report.mcq_accuracy = 0.25;
    report.timings["mean_latency_ms"] = 3.0;
    EXPECT_EQ(round_trip(report), report);
  }
}

TEST(Serialization, EnumsAreLowercaseStrings) {
  EXPECT_EQ(Json(Role::kAssistant), "assistant");
  EXPECT_EQ(Json(Agent::kAuditErase), "audit_erase");
  EXPECT_THROW(Json("robot").get<Role>(), std::exception);
}

TEST(Serialization, DecodingRevalidatesForgetSet) {
  const Json bad = {{"version", 1},
                    {"targets",
                     {{{"id", "a"}, {"canonical_name", "X Y"}, {"aliases", Json::array()}, {"added_at", 0}},
                      {{"id", "b"}, {"canonical_name", "x y"}, {"aliases", Json::array()}, {"added_at", 0}}}}};
  EXPECT_THROW(bad.get<ForgetSet>(), std::exception);
}

}  // namespace
}  // namespace unlearn
