#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "traitsim/backend.hpp"
#include "traitsim/behavior.hpp"
#include "traitsim/bfi_inventory.hpp"
#include "traitsim/error.hpp"
#include "traitsim/json_extract.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/prompting.hpp"

namespace traitsim {

inline constexpr int kDefaultRepairLimit = 3;

// One model call made while administering a phase. Passed to an optional
// observer so the caller can persist a transcript.
struct AttemptLog {
  std::string phase;  // "survey", "bfi", "sim_step"
  int step = 0;
  int attempt = 1;
  std::string prompt;
  std::string raw;
  Json parsed;        // null when nothing usable was extracted
  std::string error;  // empty when the attempt was accepted
};

using AttemptObserver = std::function<void(const AttemptLog&)>;

struct AskOptions {
  int repair_limit = kDefaultRepairLimit;
  double temperature = 0.7;
  int max_output_tokens = 1024;
};

inline std::string repair_prompt(const std::string& original, const std::string& problem) {
  return original + "\n\nYour previous response was rejected: " + problem +
         ". Respond again following the required output format exactly.";
}

// Asks `prompt`, handing each extracted object to `accept`, which returns an
// empty string on success or a one-line problem description. Rejected
// answers are re-asked up to the repair limit. Transport-level errors
// propagate unchanged; exhaustion throws `Exhausted`.
template <class Exhausted, class Accept>
Json ask_with_repair(ChatBackend& backend, const std::string& phase, int step,
                     const std::string& prompt, const AskOptions& opts, Accept&& accept,
                     const AttemptObserver& observer) {
  std::string current = prompt;
  std::string problem;
  for (int attempt = 1; attempt <= opts.repair_limit + 1; ++attempt) {
    CompletionRequest req{current, opts.temperature, opts.max_output_tokens, attempt};
    RawCompletion raw = backend.complete(req);
    AttemptLog log{phase, step, attempt, current, raw.text, nullptr, {}};
    try {
      log.parsed = extract_json(raw.text);
      problem = accept(log.parsed);
    } catch (const ParseError& e) {
      problem = e.what();
    }
    log.error = problem;
    if (observer) observer(log);
    if (problem.empty()) return log.parsed;
    current = repair_prompt(prompt, problem);
  }
  throw Exhausted(phase + " answer still invalid after " + std::to_string(opts.repair_limit) +
                  " repair attempts: " + problem);
}

struct QuestionRange {
  int lo, hi;
};

// Legal answer range of each survey question, in prompt order.
inline constexpr std::array<QuestionRange, kSurveyQuestionCount> kSurveyRanges = {{
    {0, 1}, {1, 5}, {1, 5}, {1, 4}, {1, 4}, {1, 4}, {1, 3}, {1, 3}, {1, 3}}};

struct SurveyResponse {
  std::string persona_id;
  std::array<int, kSurveyQuestionCount> answers{};
};

namespace detail {

// Integer array under "answers"; integral floats such as 3.0 are accepted.
inline std::optional<std::vector<int>> int_answers(const Json& obj, std::string& problem) {
  if (!obj.contains("answers") || !obj["answers"].is_array()) {
    problem = "missing \"answers\" array";
    return std::nullopt;
  }
  std::vector<int> out;
  for (const auto& v : obj["answers"]) {
    if (v.is_number_integer()) {
      out.push_back(v.get<int>());
    } else if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() &&
               std::abs(v.get<double>()) < 1e6) {
      out.push_back(static_cast<int>(v.get<double>()));
    } else {
      problem = "answers must be integers";
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace detail

// Empty string when valid, otherwise a one-line reason.
inline std::string validate_survey_answers(const std::vector<int>& answers) {
  if (answers.size() != kSurveyQuestionCount) {
    return "expected " + std::to_string(kSurveyQuestionCount) + " answers, got " +
           std::to_string(answers.size());
  }
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (answers[i] < kSurveyRanges[i].lo || answers[i] > kSurveyRanges[i].hi) {
      return "answer " + std::to_string(i + 1) + " must be between " +
             std::to_string(kSurveyRanges[i].lo) + " and " + std::to_string(kSurveyRanges[i].hi);
    }
  }
  return {};
}

inline SurveyResponse run_survey(const PersonaProfile& profile, ChatBackend& backend,
                                 const AskOptions& opts = {},
                                 const AttemptObserver& observer = {}) {
  SurveyResponse resp;
  resp.persona_id = profile.id();
  ask_with_repair<MalformedAnswer>(
      backend, "survey", 0, render_survey_prompt(profile), opts,
      [&](const Json& obj) -> std::string {
        std::string problem;
        auto answers = detail::int_answers(obj, problem);
        if (!answers) return problem;
        problem = validate_survey_answers(*answers);
        if (problem.empty()) std::copy(answers->begin(), answers->end(), resp.answers.begin());
        return problem;
      },
      observer);
  return resp;
}

// Survey-side composites on raw scales. Q4 is recorded but feeds no
// composite.
inline BehaviorVector survey_behaviors(const SurveyResponse& r) {
  const auto& q = r.answers;
  BehaviorVector v;
  v.source = BehaviorSource::Survey;
  v.independent_learning = q[0];
  v.impulsivity = (q[1] + q[2]) / 2.0;
  v.risk_appetite = q[5] - q[4];
  v.env_interest = (q[6] + q[7] + q[8]) / 3.0;
  return v;
}

struct BfiScore {
  std::string persona_id;
  std::array<double, kTraitCount> means{};
  std::vector<int> answers;

  double mean(Trait t) const noexcept { return means[index_of(t)]; }
};

// Per-trait mean of keyed item scores on the 1-5 scale.
inline std::array<double, kTraitCount> score_bfi(const std::vector<int>& answers,
                                                 const BfiInventory& inventory) {
  if (answers.size() != inventory.size()) {
    throw MalformedAnswer("expected " + std::to_string(inventory.size()) +
                          " inventory answers, got " + std::to_string(answers.size()));
  }
  std::array<double, kTraitCount> sums{};
  std::array<int, kTraitCount> counts{};
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto& item = inventory.items()[i];
    if (answers[i] < kBfiScaleMin || answers[i] > kBfiScaleMax) {
      throw MalformedAnswer("inventory answer out of range");
    }
    sums[index_of(item.trait)] += bfi_item_score(answers[i], item.reverse_keyed);
    ++counts[index_of(item.trait)];
  }
  std::array<double, kTraitCount> means{};
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    means[t] = counts[t] > 0 ? sums[t] / counts[t] : std::nan("");
  }
  return means;
}

inline BfiScore run_bfi(const PersonaProfile& profile, ChatBackend& backend,
                        const AskOptions& opts = {}, const AttemptObserver& observer = {},
                        const BfiInventory& inventory = default_bfi_inventory()) {
  BfiScore score;
  score.persona_id = profile.id();
  ask_with_repair<MalformedAnswer>(
      backend, "bfi", 0, render_bfi_prompt(profile, inventory), opts,
      [&](const Json& obj) -> std::string {
        std::string problem;
        auto answers = detail::int_answers(obj, problem);
        if (!answers) return problem;
        if (answers->size() != inventory.size()) {
          return "expected " + std::to_string(inventory.size()) + " answers, got " +
                 std::to_string(answers->size());
        }
        for (int a : *answers) {
          if (a < kBfiScaleMin || a > kBfiScaleMax) return "answers must be between 1 and 5";
        }
        score.answers = *answers;
        return {};
      },
      observer);
  score.means = score_bfi(score.answers, inventory);
  return score;
}

}  // namespace traitsim
