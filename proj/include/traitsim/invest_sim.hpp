#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "traitsim/backend.hpp"
#include "traitsim/behavior.hpp"
#include "traitsim/catalog.hpp"
#include "traitsim/error.hpp"
#include "traitsim/json_extract.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/prompting.hpp"
#include "traitsim/survey.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

enum class ResearchMethod { ResearchIndependently, TalkToExpert, Invest };

// Tokens exactly as the prompt spells them.
constexpr std::string_view method_token(ResearchMethod m) noexcept {
  switch (m) {
    case ResearchMethod::ResearchIndependently: return "research independantly";
    case ResearchMethod::TalkToExpert: return "talk to expert";
    case ResearchMethod::Invest: return "invest";
  }
  return "?";
}

// Case-insensitive; the correctly spelled "research independently" is
// accepted as the same token.
inline std::optional<ResearchMethod> parse_method(std::string_view s) {
  std::string t = text::to_lower(text::trim(s));
  if (t == "research independantly" || t == "research independently") {
    return ResearchMethod::ResearchIndependently;
  }
  if (t == "talk to expert") return ResearchMethod::TalkToExpert;
  if (t == "invest") return ResearchMethod::Invest;
  return std::nullopt;
}

struct SimulationAction {
  std::string company;
  ResearchMethod method = ResearchMethod::Invest;

  bool is_research() const noexcept { return method != ResearchMethod::Invest; }
  friend bool operator==(const SimulationAction&, const SimulationAction&) = default;
};

struct SimulationState {
  ResearchTally tally;
  int step_index = 0;
  std::optional<std::string> invested_company;

  explicit SimulationState(const Catalog& catalog) : tally(catalog) {}

  bool terminated() const noexcept { return invested_company.has_value(); }
  // Once every company is at the cap the persona must invest.
  bool forced() const noexcept { return tally.all_at_cap(); }

  friend bool operator==(const SimulationState&, const SimulationState&) = default;
};

// Pure transition. Throws InvalidAction for an unknown company, research
// beyond the cap, research while an investment is forced, or any action
// after termination.
inline SimulationState apply_action(const SimulationState& state, const SimulationAction& action) {
  if (state.terminated()) throw InvalidAction("simulation already terminated");
  if (!state.tally.contains(action.company)) {
    throw InvalidAction("unknown company '" + action.company + "'");
  }
  SimulationState next = state;
  if (action.is_research()) {
    if (state.forced()) throw InvalidAction("research is exhausted; method must be \"invest\"");
    next.tally.increment(action.company);
  } else {
    next.invested_company = action.company;
  }
  ++next.step_index;
  return next;
}

struct TranscriptStep {
  SimulationState before;
  SimulationAction action;
  std::string raw;  // accepted model output for this step
};

struct SimulationTranscript {
  std::string persona_id;
  std::vector<TranscriptStep> steps;
  std::string invested_company;
  bool forced_decision = false;
};

// Checks tally bounds, termination and that replaying the actions from the
// initial state reproduces every recorded snapshot. Returns an empty string
// when the transcript is consistent.
inline std::string verify_transcript(const SimulationTranscript& t, const Catalog& catalog) {
  if (t.steps.empty()) return "transcript has no steps";
  SimulationState state(catalog);
  bool reached_forced = false;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& step = t.steps[i];
    if (!(step.before == state)) return "snapshot " + std::to_string(i) + " does not replay";
    for (const auto& [name, n] : state.tally.entries()) {
      if (n < 0 || n > kResearchCap) return "tally out of bounds for " + name;
    }
    if (state.tally.total() > state.tally.capacity()) return "research total exceeds capacity";
    bool last = i + 1 == t.steps.size();
    if (step.action.is_research() == last) {
      return last ? "final action is not an investment" : "investment before the final step";
    }
    reached_forced = state.forced();
    try {
      state = apply_action(state, step.action);
    } catch (const InvalidAction& e) {
      return "step " + std::to_string(i) + " is illegal: " + e.what();
    }
  }
  if (state.invested_company != t.invested_company) return "invested company mismatch";
  if (reached_forced != t.forced_decision) return "forced_decision flag mismatch";
  return {};
}

namespace detail {

inline std::string decode_action(const Json& obj, SimulationAction& out) {
  if (!obj.contains("company") || !obj["company"].is_string()) {
    return "missing string field \"company\"";
  }
  if (!obj.contains("method") || !obj["method"].is_string()) {
    return "missing string field \"method\"";
  }
  auto method = parse_method(obj["method"].get<std::string>());
  if (!method) return "method must be one of \"research independantly\", \"talk to expert\", \"invest\"";
  out.company = std::string(text::trim(obj["company"].get<std::string>()));
  out.method = *method;
  return {};
}

}  // namespace detail

// Drives one persona through the investment task. Each step renders a
// self-contained prompt from the current tally; invalid or malformed actions
// are re-asked up to the repair limit, after which MalformedAction is thrown.
inline SimulationTranscript run_simulation(const PersonaProfile& profile, ChatBackend& backend,
                                           const Catalog& catalog = default_catalog(),
                                           const AskOptions& opts = {},
                                           const AttemptObserver& observer = {}) {
  SimulationTranscript transcript;
  transcript.persona_id = profile.id();
  SimulationState state(catalog);
  while (!state.terminated()) {
    const bool forced = state.forced();
    SimulationAction action;
    std::optional<SimulationState> next;
    std::string raw;
    ask_with_repair<MalformedAction>(
        backend, "sim_step", state.step_index, render_sim_prompt(profile, state.tally, forced, catalog),
        opts,
        [&](const Json& obj) -> std::string {
          std::string problem = detail::decode_action(obj, action);
          if (!problem.empty()) return problem;
          try {
            next = apply_action(state, action);
          } catch (const InvalidAction& e) {
            return e.what();
          }
          return {};
        },
        [&](const AttemptLog& log) {
          if (log.error.empty()) raw = log.raw;
          if (observer) observer(log);
        });
    transcript.steps.push_back(TranscriptStep{state, action, raw});
    if (!action.is_research()) transcript.forced_decision = forced;
    state = std::move(*next);
  }
  transcript.invested_company = *state.invested_company;
  return transcript;
}

// Simulation-side behavior measures plus the auxiliary columns reported
// alongside them.
struct SimMetrics {
  BehaviorVector behaviors;
  int total_research = 0;
  int independent_steps = 0;
  bool risky_investment = false;  // invested in one of the two riskiest companies
};

inline SimMetrics sim_behaviors(const SimulationTranscript& t, const Catalog& catalog = default_catalog(),
                                std::string_view eco_company = "Ruby") {
  SimMetrics m;
  for (const auto& s : t.steps) {
    if (!s.action.is_research()) continue;
    ++m.total_research;
    m.independent_steps += s.action.method == ResearchMethod::ResearchIndependently;
  }
  const int n = m.total_research;
  const int capacity = kResearchCap * static_cast<int>(catalog.size());
  auto& v = m.behaviors;
  v.source = BehaviorSource::Simulation;
  v.impulsivity = static_cast<double>(capacity - n) / capacity;
  if (n > 0) {
    v.independent_learning = static_cast<double>(m.independent_steps - (n - m.independent_steps)) / n;
  }
  const CompanySpec* invested = find_company(catalog, t.invested_company);
  if (!invested) throw InvalidAction("invested company not in catalog: " + t.invested_company);
  v.risk_appetite = invested->risk;

  std::vector<double> risks;
  for (const auto& c : catalog) risks.push_back(c.risk);
  std::sort(risks.begin(), risks.end(), std::greater<>());
  double threshold = risks.size() >= 2 ? risks[1] : risks.front();
  m.risky_investment = invested->risk >= threshold;

  int eco_tally = 0;
  for (const auto& s : t.steps) {
    if (s.action.is_research() && s.action.company == eco_company) ++eco_tally;
  }
  v.env_interest = eco_tally;
  v.env_investment = t.invested_company == eco_company ? 1.0 : 0.0;
  return m;
}

}  // namespace traitsim
