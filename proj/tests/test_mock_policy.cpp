#include <gtest/gtest.h>

#include "traitsim/json_extract.hpp"
#include "traitsim/mock_policy.hpp"
#include "traitsim/survey.hpp"

using namespace traitsim;

namespace {

ResearchTally fresh() { return ResearchTally(default_catalog()); }

ResearchTally full() {
  ResearchTally t(default_catalog());
  for (const auto& c : default_catalog()) t.set(c.name, 5);
  return t;
}

bool legal_method(const std::string& m) {
  return m == "research independantly" || m == "talk to expert" || m == "invest";
}

}  // namespace

TEST(MockPolicy, DeterministicPerPromptAndSeed) {
  auto p = PersonaProfile::from_id("M-M-M-M-M");
  for (const auto& prompt : {render_survey_prompt(p), render_bfi_prompt(p), render_sim_prompt(p, fresh(), false)}) {
    EXPECT_EQ(mock_policy_respond(prompt, 7), mock_policy_respond(prompt, 7));
  }
  MockPolicyBackend a(7), b(7);
  CompletionRequest req{render_survey_prompt(p)};
  EXPECT_EQ(a.complete(req).text, b.complete(req).text);
  EXPECT_EQ(a.label(), "mock:7");
}

TEST(MockPolicy, SurveyAnswerObject) {
  for (const auto& p : generate_grid()) {
    auto j = extract_json(mock_policy_respond(render_survey_prompt(p), 7));
    ASSERT_TRUE(j.contains("answers"));
    std::vector<int> a = j["answers"].get<std::vector<int>>();
    EXPECT_EQ(validate_survey_answers(a), "") << p.id();
  }
}

TEST(MockPolicy, BfiAnswerObject) {
  for (const auto& p : generate_grid()) {
    auto j = extract_json(mock_policy_respond(render_bfi_prompt(p), 3));
    auto a = j["answers"].get<std::vector<int>>();
    ASSERT_EQ(a.size(), 44u);
    for (int x : a) {
      EXPECT_GE(x, 1);
      EXPECT_LE(x, 5);
    }
  }
}

TEST(MockPolicy, SimActionIsLegal) {
  auto p = PersonaProfile::from_id("M-M-M-M-M");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto j = extract_json(mock_policy_respond(render_sim_prompt(p, fresh(), false), seed));
    ASSERT_TRUE(j["method"].is_string());
    EXPECT_TRUE(legal_method(j["method"].get<std::string>()));
    EXPECT_NE(find_company(default_catalog(), j["company"].get<std::string>()), nullptr);
  }
}

TEST(MockPolicy, FullTallyForcesInvest) {
  for (const auto& p : generate_grid()) {
    for (bool forced : {false, true}) {
      auto j = extract_json(mock_policy_respond(render_sim_prompt(p, full(), forced), 7));
      EXPECT_EQ(j["method"], "invest");
    }
  }
}

TEST(MockPolicy, ConscientiousnessRaisesQ1) {
  for (const auto& p : generate_grid()) {
    if (p.level(Trait::Conscientiousness) != TraitLevel::Low) continue;
    auto levels = p.levels();
    levels[index_of(Trait::Conscientiousness)] = TraitLevel::High;
    PersonaProfile high(levels);
    for (std::uint64_t seed : {1u, 7u, 99u}) {
      auto lo = extract_json(mock_policy_respond(render_survey_prompt(p), seed))["answers"][0].get<int>();
      auto hi = extract_json(mock_policy_respond(render_survey_prompt(high), seed))["answers"][0].get<int>();
      EXPECT_GE(hi, lo) << p.id() << " seed " << seed;
    }
  }
}

TEST(MockPolicy, UnrecognizedPrompt) {
  EXPECT_THROW(mock_policy_respond("What is the weather?", 7), UnrecognizedPrompt);
}

TEST(MockPolicy, PicksNearestRiskWithRiskierTieBreak) {
  std::vector<mock::ListedCompany> cs = {
      {"Diamond", 10, false, 0}, {"Platinum", 30, false, 0}, {"Emerald", 50, false, 0},
      {"Ruby", 30, true, 0},     {"Sapphire", 60, false, 0}};
  // Target 35 + 10 * (O - C + E - A - N).
  auto pick = [&](const char* id) { return mock::final_pick(mock::TraitCodes(PersonaProfile::from_id(id)), cs).name; };
  EXPECT_EQ(pick("M-M-M-M-M"), "Platinum");  // target 35: Platinum and Ruby at 5, non-eco preferred
  EXPECT_EQ(pick("M-L-M-M-M"), "Emerald");   // target 45: Emerald at 5
  EXPECT_EQ(pick("H-M-M-M-M"), "Ruby");      // target 45, lean 1: Ruby within 15 of best 5
  EXPECT_EQ(pick("M-H-M-M-M"), "Platinum");  // target 25
  EXPECT_EQ(pick("H-L-H-L-L"), "Sapphire");  // target 85
  EXPECT_EQ(pick("L-H-L-H-H"), "Diamond");   // target -15
  EXPECT_EQ(pick("M-M-H-L-M"), "Sapphire");  // target 55: Emerald/Sapphire tie, riskier wins
  // Positive environmental lean (O + E - A - N > 0) takes Ruby within one notch.
  EXPECT_EQ(pick("H-H-M-M-M"), "Ruby");      // target 35, lean 1
}

TEST(MockPolicy, BudgetFollowsTraits) {
  auto budget = [](const char* id) {
    return mock::research_budget(mock::TraitCodes(PersonaProfile::from_id(id)), 0, 25);
  };
  EXPECT_EQ(budget("M-M-M-M-M"), 12);
  EXPECT_EQ(budget("H-H-L-L-H"), 25);
  EXPECT_EQ(budget("L-L-H-H-L"), 0);
  EXPECT_EQ(budget("H-M-M-M-M"), 15);
}

TEST(MockPolicy, SeedDerivationSeparatesStreams) {
  EXPECT_NE(mock::derive_seed(7, "call", "x"), mock::derive_seed(8, "call", "x"));
  EXPECT_NE(mock::derive_seed(7, "call", "x"), mock::derive_seed(7, "budget", "x"));
  EXPECT_EQ(mock::derive_seed(7, "call", "x"), mock::derive_seed(7, "call", "x"));
}
