#include <gtest/gtest.h>

#include <set>

#include "support/synthetic.hpp"
#include "telephone/error.hpp"
#include "telephone/rotation.hpp"

namespace telephone {
namespace {

using Strings = std::vector<std::string>;

std::string path_of(const RotationPlan& p) {
  std::string s = p.hops.front().from_lang;
  for (const auto& h : p.hops) s += ">" + h.to_lang;
  return s;
}

void expect_chained(const RotationPlan& p) {
  for (std::size_t k = 1; k < p.hops.size(); ++k) EXPECT_EQ(p.hops[k].from_lang, p.hops[k - 1].to_lang) << k;
  for (const auto& h : p.hops) EXPECT_NE(h.from_lang, h.to_lang);
}

TEST(ModelRotation, TurkishEnglishThreeModels) {
  const Strings models = {"gemma", "qwen", "nllb"};
  const auto p = build_model_rotation_plan("tr", "en", models, 3);
  ASSERT_EQ(p.hops.size(), 6u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(p.hops[2 * j], (Hop{models[j], "tr", "en", Direction::forward, j + 1}));
    EXPECT_EQ(p.hops[2 * j + 1], (Hop{models[j], "en", "tr", Direction::back, j + 1}));
  }
  EXPECT_EQ(p.iteration_count(), 3u);
  EXPECT_NO_THROW(validate(p));
}

TEST(ModelRotation, SingleModelSingleIteration) {
  const Strings models = {"m1"};
  const auto p = build_model_rotation_plan("cs", "en", models, 1);
  ASSERT_EQ(p.hops.size(), 2u);
  EXPECT_EQ(p.hops[0].translator_id, "m1");
  EXPECT_EQ(p.hops[1].translator_id, "m1");
}

TEST(ModelRotation, CyclesThroughModels) {
  const Strings models = {"a", "b", "c"};
  const auto p = build_model_rotation_plan("de", "en", models, 4);
  EXPECT_EQ(p.hops[6].translator_id, "a");
  EXPECT_EQ(p.hops[7].translator_id, "a");
  EXPECT_EQ(p.hops[6].iteration_index, 4u);
}

TEST(ModelRotation, RejectsZeroIterationsAndNoModels) {
  const Strings models = {"a"};
  EXPECT_THROW(build_model_rotation_plan("de", "en", models, 0), InvalidArgument);
  EXPECT_THROW(build_model_rotation_plan("de", "en", Strings{}, 2), InvalidArgument);
}

TEST(ModelRotation, DuplicateModelsAllowed) {
  const Strings models = {"a", "a"};
  EXPECT_EQ(build_model_rotation_plan("de", "en", models, 2).hops.size(), 4u);
}

TEST(LanguageRotation, PivotedCzechHighDiversity) {
  LanguageRotationOptions o;
  o.pivot = "en";
  const auto p = build_language_rotation_plan("cs", {"cs", "ja", "ps"}, o);
  EXPECT_EQ(path_of(p), "cs>en>ja>en>ps>en>cs");
  EXPECT_EQ(p.kind, PlanKind::language_rotation_pivot);
  EXPECT_EQ(p.iteration_count(), 3u);
  expect_chained(p);
}

TEST(LanguageRotation, PivotedStartsAtTheSourcePosition) {
  LanguageRotationOptions o;
  o.pivot = "en";
  const auto p = build_language_rotation_plan("ja", {"cs", "ja", "ps"}, o);
  EXPECT_EQ(path_of(p), "ja>en>ps>en>cs>en>ja");
}

TEST(LanguageRotation, DirectOneCycle) {
  LanguageRotationOptions o;
  const auto p = build_language_rotation_plan("cs", {"cs", "pl", "ru"}, o);
  EXPECT_EQ(path_of(p), "cs>pl>ru>cs");
  EXPECT_EQ(p.kind, PlanKind::language_rotation_direct);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(p.hops[k].iteration_index, k + 1);
}

TEST(LanguageRotation, RejectsBadTriplets) {
  LanguageRotationOptions o;
  EXPECT_THROW(build_language_rotation_plan("xx", {"xx", "yy", "xx"}, o), InvalidArgument);
  o.pivot = "pl";
  EXPECT_THROW(build_language_rotation_plan("cs", {"cs", "pl", "ru"}, o), InvalidArgument);
  o.pivot = "en";
  EXPECT_THROW(build_language_rotation_plan("de", {"cs", "pl", "ru"}, o), InvalidArgument);
}

TEST(Triplets, AppendixRows) {
  const Triplet low = {"cs", "pl", "ru"}, high = {"cs", "ja", "ps"};
  EXPECT_EQ(lookup_triplet(TripletTable::builtin(Diversity::low), "cs"), low);
  EXPECT_EQ(lookup_triplet(TripletTable::builtin(Diversity::high), "cs"), high);
}

TEST(Triplets, EveryRowStartsWithItsKey) {
  for (auto d : {Diversity::low, Diversity::high}) {
    const auto& table = TripletTable::builtin(d);
    for (const auto& lang : table.languages()) {
      const auto& t = lookup_triplet(table, lang);
      EXPECT_EQ(t[0], lang);
      EXPECT_EQ(std::set<std::string>(t.begin(), t.end()).size(), 3u);
    }
  }
}

TEST(Triplets, UnknownLanguageListsSupported) {
  try {
    lookup_triplet(TripletTable::builtin(Diversity::low), "zz");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("cs"), std::string::npos);
  }
}

TEST(Triplets, OverrideFromJson) {
  const auto t = TripletTable::from_json(R"({"diversity":"high","triplets":{"xx":["xx","yy","zz"]}})");
  EXPECT_EQ(lookup_triplet(t, "xx")[2], "zz");
  EXPECT_THROW(TripletTable::from_json(R"({"diversity":"high","triplets":{"xx":["xx","yy"]}})"), Error);
}

std::size_t total_hops(const std::vector<RotationPlan>& plans) {
  std::size_t n = 0;
  for (const auto& p : plans) n += p.hops.size();
  return n;
}

TEST(Standard18, EveryDefaultDesignHasEighteenRounds) {
  for (const auto& config : {default_model_rotation_config(), default_language_rotation_config(Diversity::low, false),
                             default_language_rotation_config(Diversity::high, true)}) {
    const auto plans = standard_18_round_plans("cs", "en", config);
    ASSERT_EQ(plans.size(), 3u);
    EXPECT_EQ(total_hops(plans), 18u);
    std::set<std::string> ids;
    for (const auto& p : plans) {
      ids.insert(p.plan_id);
      EXPECT_EQ(p.iteration_count(), 3u);
      expect_chained(p);
      EXPECT_NO_THROW(validate(p));
    }
    EXPECT_EQ(ids.size(), 3u);
  }
}

TEST(Standard18, DirectLegsReturnToTheSource) {
  const auto plans = standard_18_round_plans("cs", "en", default_language_rotation_config(Diversity::low, true));
  EXPECT_EQ(path_of(plans[0]), "cs>pl>ru>cs>pl>ru>cs");
}

TEST(Standard18, WrongSetupCountRejected) {
  auto config = default_model_rotation_config();
  config.setups.pop_back();
  EXPECT_THROW(standard_18_round_plans("cs", "en", config), InvalidArgument);
  auto four = default_model_rotation_config();
  four.setups.push_back(four.setups[0]);
  EXPECT_THROW(standard_18_round_plans("cs", "en", four), InvalidArgument);
}

TEST(Standard18, DefaultModelSetupsAreCyclicShifts) {
  const auto plans = standard_18_round_plans("cs", "en", default_model_rotation_config());
  EXPECT_EQ(plans[0].hops[0].translator_id, plans[2].hops[2].translator_id);
  EXPECT_EQ(plans[1].hops[0].translator_id, plans[0].hops[2].translator_id);
}

TEST(PlanConfig, ParsesSetups) {
  const auto c = parse_plan_config(R"({"setups":[
      {"kind":"model","translators":["a","b"],"iterations":2},
      {"kind":"language","triplet":["cs","ja","ps"],"pivot":"en","translator":"m"},
      {"kind":"language-direct","diversity":"high"}]})");
  ASSERT_EQ(c.setups.size(), 3u);
  const auto plans = build_plans("cs", "en", c);
  EXPECT_EQ(plans[0].hops.size(), 4u);
  EXPECT_EQ(path_of(plans[1]), "cs>en>ja>en>ps>en>cs");
  EXPECT_EQ(plans[2].hops.size(), 3u);
  EXPECT_THROW(parse_plan_config(R"({"setups":[{"kind":"sideways"}]})"), Error);
  EXPECT_THROW(parse_plan_config(R"({"plans":[]})"), Error);
}

TEST(ComparisonPositions, Rules) {
  const Strings models = {"a", "b", "c"};
  const auto p = build_model_rotation_plan("cs", "en", models, 3);
  EXPECT_EQ(comparison_positions(p, ComparisonRule::end_of_iteration), (std::vector<std::size_t>{2, 4, 6}));
  EXPECT_EQ(comparison_positions(p, ComparisonRule::forward_output), (std::vector<std::size_t>{1, 3, 5}));
  EXPECT_EQ(comparison_positions(p, ComparisonRule::every_hop).size(), 6u);
  EXPECT_EQ(language_at(p, 0), "cs");
  EXPECT_EQ(language_at(p, 1), "en");
  EXPECT_EQ(language_at(p, 6), "cs");
}

TEST(PlanFile, RoundTrips) {
  testing::ScratchDir dir("plans");
  const auto plans = standard_18_round_plans("cs", "en", default_language_rotation_config(Diversity::high, false));
  write_plans(plans, dir / "plans.json");
  EXPECT_EQ(read_plans(dir / "plans.json"), plans);
}

TEST(PlanGeneration, Deterministic) {
  EXPECT_EQ(standard_18_round_plans("de", "en", default_model_rotation_config()),
            standard_18_round_plans("de", "en", default_model_rotation_config()));
}

}  // namespace
}  // namespace telephone
