#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "traitsim/mock_policy.hpp"
#include "traitsim/survey.hpp"

using namespace traitsim;
using traitsim::testing::ScriptedBackend;

namespace {

const PersonaProfile kMedium = PersonaProfile::from_id("M-M-M-M-M");

SurveyResponse response(std::array<int, 9> a) {
  SurveyResponse r;
  r.answers = a;
  return r;
}

// Scoring key read straight from the data file, independent of BfiInventory.
struct KeyRow {
  char trait;
  bool reverse;
};

std::vector<KeyRow> read_key() {
  std::ifstream in(std::string(TRAITSIM_DATA_DIR) + "/bfi44.tsv");
  std::vector<KeyRow> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string num, trait, key;
    std::getline(ss, num, '\t');
    std::getline(ss, trait, '\t');
    std::getline(ss, key, '\t');
    out.push_back({trait[0], key == "-"});
  }
  return out;
}

std::size_t slot(char t) { return std::string("OCEAN").find(t); }

}  // namespace

TEST(Survey, MockGivesNineInRangeIntegers) {
  MockPolicyBackend mock(7);
  for (const auto& p : generate_grid()) {
    auto r = run_survey(p, mock);
    for (std::size_t i = 0; i < 9; ++i) {
      EXPECT_GE(r.answers[i], kSurveyRanges[i].lo);
      EXPECT_LE(r.answers[i], kSurveyRanges[i].hi);
    }
  }
}

TEST(Survey, EightAnswersRepairedThenAccepted) {
  auto b = ScriptedBackend::replies({R"({"answers": [1,3,3,2,2,2,2,2]})", R"({"answers": [1,3,3,2,2,2,2,2,2]})"});
  std::vector<AttemptLog> logs;
  auto r = run_survey(kMedium, *b, {}, [&](const AttemptLog& l) { logs.push_back(l); });
  EXPECT_EQ(b->calls(), 2u);
  EXPECT_EQ(r.answers[8], 2);
  ASSERT_EQ(logs.size(), 2u);
  EXPECT_NE(logs[0].error.find("9"), std::string::npos);
  EXPECT_TRUE(logs[1].error.empty());
  EXPECT_EQ(logs[1].attempt, 2);
  // The re-ask carries the original prompt and names the problem.
  auto prompts = b->prompts();
  EXPECT_EQ(prompts[1].rfind(prompts[0], 0), 0u);
  EXPECT_NE(prompts[1].find("Your previous response was rejected: "), std::string::npos);
}

TEST(Survey, UnresolvedEightAnswersFails) {
  auto b = ScriptedBackend::replies({R"({"answers": [1,3,3,2,2,2,2,2]})"});
  AskOptions opts;
  opts.repair_limit = 1;
  EXPECT_THROW(run_survey(kMedium, *b, opts), MalformedAnswer);
  EXPECT_EQ(b->calls(), 2u);
}

TEST(Survey, DefaultRepairLimitIsThree) {
  auto b = ScriptedBackend::replies({"no json here"});
  EXPECT_THROW(run_survey(kMedium, *b), MalformedAnswer);
  EXPECT_EQ(b->calls(), 4u);
}

TEST(Survey, BinaryFirstQuestion) {
  auto b = ScriptedBackend::replies({R"({"answers": [2,3,3,2,2,2,2,2,2]})", R"({"answers": [0,3,3,2,2,2,2,2,2]})"});
  auto r = run_survey(kMedium, *b);
  EXPECT_EQ(b->calls(), 2u);
  EXPECT_EQ(r.answers[0], 0);
  EXPECT_NE(validate_survey_answers({2, 3, 3, 2, 2, 2, 2, 2, 2}), "");
}

TEST(Survey, RangeChecks) {
  EXPECT_EQ(validate_survey_answers({1, 5, 1, 4, 1, 4, 3, 1, 3}), "");
  EXPECT_NE(validate_survey_answers({1, 6, 1, 4, 1, 4, 3, 1, 3}), "");
  EXPECT_NE(validate_survey_answers({1, 5, 1, 5, 1, 4, 3, 1, 3}), "");
  EXPECT_NE(validate_survey_answers({1, 5, 1, 4, 1, 4, 3, 1, 4}), "");
  EXPECT_NE(validate_survey_answers({1, 5, 1, 4, 1, 4, 3, 1, 0}), "");
}

TEST(Survey, FloatAnswersAccepted) {
  auto b = ScriptedBackend::replies({R"({"answers": [1.0,3,3,2,2,2,2,2,2.0]})"});
  EXPECT_EQ(run_survey(kMedium, *b).answers[0], 1);
  auto c = ScriptedBackend::replies({R"({"answers": [1.5,3,3,2,2,2,2,2,2]})", R"({"answers": ["1",3,3,2,2,2,2,2,2]})"});
  AskOptions opts;
  opts.repair_limit = 1;
  EXPECT_THROW(run_survey(kMedium, *c, opts), MalformedAnswer);
}

TEST(Survey, TransportErrorsPropagate) {
  ScriptedBackend b([](const CompletionRequest&, int) -> std::string { throw TransportError("down"); });
  EXPECT_THROW(run_survey(kMedium, b), TransportError);
  EXPECT_EQ(b.calls(), 1u);
}

TEST(SurveyBehaviors, Midpoint) {
  auto v = survey_behaviors(response({1, 3, 3, 2, 2, 2, 2, 2, 2}));
  EXPECT_EQ(v.independent_learning, 1.0);
  EXPECT_EQ(v.impulsivity, 3.0);
  EXPECT_EQ(v.risk_appetite, 0.0);
  EXPECT_EQ(v.env_interest, 2.0);
  EXPECT_FALSE(v.env_investment.has_value());
}

TEST(SurveyBehaviors, Extremes) {
  auto hi = survey_behaviors(response({0, 5, 5, 1, 1, 4, 3, 3, 3}));
  EXPECT_EQ(hi.independent_learning, 0.0);
  EXPECT_EQ(hi.impulsivity, 5.0);
  EXPECT_EQ(hi.risk_appetite, 3.0);
  EXPECT_EQ(hi.env_interest, 3.0);
  auto lo = survey_behaviors(response({1, 1, 1, 4, 4, 1, 1, 1, 1}));
  EXPECT_EQ(lo.impulsivity, 1.0);
  EXPECT_EQ(lo.risk_appetite, -3.0);
  EXPECT_EQ(lo.env_interest, 1.0);
}

TEST(SurveyBehaviors, QuestionFourEntersNoComposite) {
  auto a = survey_behaviors(response({1, 2, 4, 1, 2, 3, 1, 2, 3}));
  auto b = survey_behaviors(response({1, 2, 4, 4, 2, 3, 1, 2, 3}));
  EXPECT_EQ(a.impulsivity, b.impulsivity);
  EXPECT_EQ(a.risk_appetite, b.risk_appetite);
  EXPECT_EQ(a.env_interest, b.env_interest);
  EXPECT_EQ(a.impulsivity, 3.0);
  EXPECT_EQ(a.env_interest, 2.0);
}

TEST(SurveyBehaviors, BoundsOverAllValidAnswers) {
  // Exhaustive over the composite questions.
  for (int q2 = 1; q2 <= 5; ++q2)
    for (int q3 = 1; q3 <= 5; ++q3)
      for (int q5 = 1; q5 <= 4; ++q5)
        for (int q6 = 1; q6 <= 4; ++q6)
          for (int q7 = 1; q7 <= 3; ++q7)
            for (int q9 = 1; q9 <= 3; ++q9) {
              auto v = survey_behaviors(response({1, q2, q3, 2, q5, q6, q7, 2, q9}));
              EXPECT_GE(v.impulsivity, 1.0);
              EXPECT_LE(v.impulsivity, 5.0);
              EXPECT_GE(v.risk_appetite, -3.0);
              EXPECT_LE(v.risk_appetite, 3.0);
              EXPECT_GE(v.env_interest, 1.0);
              EXPECT_LE(v.env_interest, 3.0);
            }
}

TEST(BfiInventoryTest, ScoringKeyCounts) {
  const auto& inv = default_bfi_inventory();
  EXPECT_EQ(inv.size(), 44u);
  auto key = read_key();
  ASSERT_EQ(key.size(), 44u);
  std::array<int, 5> k{}, r{};
  for (const auto& row : key) {
    ++k[slot(row.trait)];
    r[slot(row.trait)] += row.reverse;
  }
  // O C E A N
  EXPECT_EQ(k, (std::array<int, 5>{10, 9, 8, 9, 8}));
  EXPECT_EQ(r, (std::array<int, 5>{2, 4, 3, 4, 3}));
  for (Trait t : kAllTraits) {
    EXPECT_EQ(inv.item_count(t), static_cast<std::size_t>(k[index_of(t)]));
    EXPECT_EQ(inv.reverse_count(t), static_cast<std::size_t>(r[index_of(t)]));
  }
}

TEST(BfiScoring, ReverseKeyPairsSumToSix) {
  for (int x = 1; x <= 5; ++x) EXPECT_EQ(bfi_item_score(x, false) + bfi_item_score(x, true), 6);
}

TEST(BfiScoring, AllThrees) {
  auto m = score_bfi(std::vector<int>(44, 3), default_bfi_inventory());
  for (double v : m) EXPECT_EQ(v, 3.0);
}

TEST(BfiScoring, AllFives) {
  // (5(k - r) + r) / k per trait.
  auto m = score_bfi(std::vector<int>(44, 5), default_bfi_inventory());
  EXPECT_DOUBLE_EQ(m[index_of(Trait::Openness)], 42.0 / 10.0);
  EXPECT_DOUBLE_EQ(m[index_of(Trait::Conscientiousness)], 29.0 / 9.0);
  EXPECT_DOUBLE_EQ(m[index_of(Trait::Extraversion)], 28.0 / 8.0);
  EXPECT_DOUBLE_EQ(m[index_of(Trait::Agreeableness)], 29.0 / 9.0);
  EXPECT_DOUBLE_EQ(m[index_of(Trait::Neuroticism)], 28.0 / 8.0);
}

TEST(BfiScoring, AllOnes) {
  auto m = score_bfi(std::vector<int>(44, 1), default_bfi_inventory());
  EXPECT_DOUBLE_EQ(m[index_of(Trait::Openness)], (8.0 + 10.0) / 10.0);
  EXPECT_DOUBLE_EQ(m[index_of(Trait::Extraversion)], (5.0 + 15.0) / 8.0);
}

TEST(BfiScoring, MixedPatternMatchesKeyOracle) {
  auto key = read_key();
  std::vector<int> answers;
  for (std::size_t i = 0; i < 44; ++i) answers.push_back(static_cast<int>(i * 7 % 5) + 1);
  std::array<double, 5> sum{};
  std::array<int, 5> n{};
  for (std::size_t i = 0; i < 44; ++i) {
    sum[slot(key[i].trait)] += key[i].reverse ? 6 - answers[i] : answers[i];
    ++n[slot(key[i].trait)];
  }
  auto m = score_bfi(answers, default_bfi_inventory());
  for (std::size_t t = 0; t < 5; ++t) EXPECT_DOUBLE_EQ(m[t], sum[t] / n[t]);
}

TEST(BfiScoring, RejectsBadInput) {
  EXPECT_THROW(score_bfi(std::vector<int>(43, 3), default_bfi_inventory()), MalformedAnswer);
  std::vector<int> a(44, 3);
  a[5] = 6;
  EXPECT_THROW(score_bfi(a, default_bfi_inventory()), MalformedAnswer);
}

TEST(Bfi, MockRunScoresHighTraitsHigher) {
  MockPolicyBackend mock(7);
  auto hi = run_bfi(PersonaProfile::from_id("H-H-H-H-H"), mock);
  auto lo = run_bfi(PersonaProfile::from_id("L-L-L-L-L"), mock);
  ASSERT_EQ(hi.answers.size(), 44u);
  for (Trait t : kAllTraits) EXPECT_GT(hi.mean(t), lo.mean(t)) << trait_symbol(t);
}

TEST(Bfi, WrongLengthRepaired) {
  std::string bad = "{\"answers\": [3,3,3]}";
  std::string good = "{\"answers\": [3";
  for (int i = 1; i < 44; ++i) good += ",3";
  good += "]}";
  auto b = ScriptedBackend::replies({bad, good});
  auto s = run_bfi(kMedium, *b);
  EXPECT_EQ(b->calls(), 2u);
  EXPECT_EQ(s.mean(Trait::Openness), 3.0);
}
