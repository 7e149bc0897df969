#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "traitsim/backend.hpp"
#include "traitsim/bfi_inventory.hpp"
#include "traitsim/error.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/prompting.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

// Deterministic persona policy standing in for a chat model. Responses are a
// pure function of (prompt, seed): the trait header parsed from the prompt
// drives every answer in the direction the human-research expectation table
// predicts, with small seeded jitter. This gives the analysis stage a known
// sign structure to recover without network access.
namespace mock {

struct TraitCodes {
  int o, c, e, a, n;
  explicit TraitCodes(const PersonaProfile& p)
      : o(p.encoded(Trait::Openness)),
        c(p.encoded(Trait::Conscientiousness)),
        e(p.encoded(Trait::Extraversion)),
        a(p.encoded(Trait::Agreeableness)),
        n(p.encoded(Trait::Neuroticism)) {}

  // Signed trait sums, one per expected-sign row.
  int learning() const noexcept { return c - o - e - a - n; }
  int impulsivity() const noexcept { return -o - c + e + a - n; }
  int risk() const noexcept { return o - c + e - a - n; }
  int env_interest() const noexcept { return o - e + a; }
  int env_investment() const noexcept { return o + e - a - n; }
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::string_view key) {
  std::uint64_t h = text::fnv1a64(tag, 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL));
  return text::fnv1a64(key, h);
}

// Thin wrapper pinning the draws to bit patterns, so results do not depend
// on the standard library's distribution implementations.
class Draws {
 public:
  explicit Draws(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  int jitter() { return static_cast<int>(gen_() % 3) - 1; }

 private:
  std::mt19937_64 gen_;
};

inline int round_clamp(double x, int lo, int hi) {
  return std::clamp(static_cast<int>(std::floor(x + 0.5)), lo, hi);
}

inline std::string survey_response(const PersonaProfile& p, Draws& d) {
  TraitCodes t(p);
  std::vector<int> a(kSurveyQuestionCount);
  a[0] = t.learning() + 0.5 * d.jitter() > 0 ? 1 : 0;
  a[1] = round_clamp(3 + 0.5 * t.impulsivity() + 0.5 * d.jitter(), 1, 5);
  a[2] = round_clamp(3 + 0.5 * t.impulsivity() + 0.5 * d.jitter(), 1, 5);
  a[3] = round_clamp(2.5 + 0.5 * d.jitter(), 1, 4);
  a[4] = round_clamp(2.5 - 0.5 * t.risk() + 0.5 * d.jitter(), 1, 4);
  a[5] = round_clamp(2.5 + 0.5 * t.risk() + 0.5 * d.jitter(), 1, 4);
  for (std::size_t q = 6; q < 9; ++q) {
    a[q] = round_clamp(2 + 0.5 * t.env_interest() + 0.5 * d.jitter(), 1, 3);
  }
  std::string out = "```json\n{\"answers\": [";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(a[i]);
  }
  return out + "]}\n```";
}

inline std::string bfi_response(const PersonaProfile& p, std::string_view prompt, Draws& d) {
  const auto& inv = default_bfi_inventory();
  auto body = prompt.substr(prompt.find(kBfiSentinel));
  std::string out = "{\"answers\": [";
  bool first = true;
  for (std::string_view line : text::split_lines(body)) {
    auto dot = line.find(". ");
    if (dot == std::string_view::npos || dot == 0 ||
        line.substr(0, dot).find_first_not_of("0123456789") != std::string_view::npos) {
      continue;
    }
    auto statement = line.substr(dot + 2);
    int answer = 3;
    for (const auto& item : inv.items()) {
      if (item.text == statement) {
        int agree = round_clamp(3 + 1.5 * p.encoded(item.trait) + 0.5 * d.jitter(), 1, 5);
        answer = bfi_item_score(agree, item.reverse_keyed);
        break;
      }
    }
    if (!first) out += ", ";
    out += std::to_string(answer);
    first = false;
  }
  return out + "]}";
}

struct ListedCompany {
  std::string name;
  int risk_pct = 0;  // risk in hundredths, so nearest-risk ties are exact
  bool eco = false;
  int tally = 0;
};

// Company names and risks come from the objective block, counts from the
// research block, so the policy works for any rendered catalog.
inline std::vector<ListedCompany> parse_listing(std::string_view prompt) {
  std::vector<ListedCompany> out;
  auto obj_open = prompt.find("<objective>");
  auto obj_close = prompt.find("</objective>");
  if (obj_open == std::string_view::npos || obj_close == std::string_view::npos) {
    throw UnrecognizedPrompt("simulation prompt without objective block");
  }
  for (auto line : text::split_lines(prompt.substr(obj_open, obj_close - obj_open))) {
    if (!text::starts_with(line, "- ")) continue;
    ListedCompany c;
    auto rest = line.substr(2);
    c.name = std::string(rest.substr(0, rest.find_first_of(" ,")));
    auto rk = line.rfind("risk: ");
    if (rk == std::string_view::npos) continue;
    c.risk_pct = static_cast<int>(std::lround(text::parse_double(line.substr(rk + 6)) * 100));
    c.eco = line.find("eco-conscious") != std::string_view::npos;
    out.push_back(std::move(c));
  }
  auto r_open = prompt.find("<research>");
  auto r_close = prompt.find("</research>");
  for (auto line : text::split_lines(prompt.substr(r_open, r_close - r_open))) {
    auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    auto name = text::trim(line.substr(0, colon));
    auto rest = text::trim(line.substr(colon + 1));
    for (auto& c : out) {
      if (c.name == name) c.tally = static_cast<int>(text::parse_int(rest.substr(0, rest.find(' '))));
    }
  }
  if (out.empty()) throw UnrecognizedPrompt("simulation prompt lists no companies");
  return out;
}

inline int research_budget(const TraitCodes& t, int jitter, int capacity) {
  return std::clamp(12 + 3 * t.o + 3 * t.c - 3 * t.e - 3 * t.a + 3 * t.n + jitter, 0, capacity);
}

inline double independent_probability(const TraitCodes& t) {
  return 0.5 + 0.12 * t.learning();
}

inline double eco_research_weight(const TraitCodes& t) {
  return std::max(0.1, 1.0 + 1.0 * (t.a + t.o - t.e));
}

// Invest where the risk factor is nearest the persona's target risk;
// equidistant alternatives resolve toward the riskier company. Personas with a
// positive environmental-investment lean accept the eco company whenever it
// sits within one risk notch (0.1) of the best distance.
inline const ListedCompany& final_pick(const TraitCodes& t, const std::vector<ListedCompany>& cs) {
  const int target = 35 + 10 * t.risk();
  int best = 1 << 30;
  for (const auto& c : cs) best = std::min(best, std::abs(c.risk_pct - target));
  if (t.env_investment() > 0) {
    for (const auto& c : cs) {
      if (c.eco && std::abs(c.risk_pct - target) <= best + 10) return c;
    }
  }
  const ListedCompany* pick = nullptr;
  for (const auto& c : cs) {
    if (std::abs(c.risk_pct - target) != best) continue;
    if (!pick || c.risk_pct > pick->risk_pct || (c.risk_pct == pick->risk_pct && pick->eco && !c.eco)) {
      pick = &c;
    }
  }
  return *pick;
}

inline std::string action_json(std::string_view company, std::string_view method) {
  return "{\"company\": \"" + std::string(company) + "\", \"method\": \"" + std::string(method) + "\"}";
}

inline std::string sim_response(const PersonaProfile& p, std::string_view prompt, bool forced,
                                std::uint64_t seed, Draws& d) {
  TraitCodes t(p);
  auto companies = parse_listing(prompt);
  int total = 0;
  for (const auto& c : companies) total += c.tally;
  const int capacity = kResearchCap * static_cast<int>(companies.size());
  Draws persona_draws(derive_seed(seed, "budget", p.id()));
  const int budget = research_budget(t, persona_draws.jitter(), capacity);

  std::vector<const ListedCompany*> open;
  for (const auto& c : companies) {
    if (c.tally < kResearchCap) open.push_back(&c);
  }
  if (forced || open.empty() || total >= budget) {
    return action_json(final_pick(t, companies).name, "invest");
  }

  const char* method = d.uniform() < independent_probability(t) ? "research independantly"
                                                                 : "talk to expert";
  double sum = 0;
  std::vector<double> weights;
  for (const auto* c : open) {
    weights.push_back(c->eco ? eco_research_weight(t) : 1.0);
    sum += weights.back();
  }
  double r = d.uniform() * sum;
  const ListedCompany* target = open.back();
  for (std::size_t i = 0; i < open.size(); ++i) {
    if (r < weights[i]) {
      target = open[i];
      break;
    }
    r -= weights[i];
  }
  return action_json(target->name, method);
}

}  // namespace mock

// Pure function of (prompt, seed). Throws UnrecognizedPrompt when the prompt
// carries none of the sentinel phrases.
inline std::string mock_policy_respond(std::string_view prompt, std::uint64_t seed) {
  auto kind = detect_prompt_kind(prompt);
  if (!kind) throw UnrecognizedPrompt("mock policy cannot classify prompt");
  PersonaProfile profile = parse_persona_header(prompt);
  mock::Draws draws(mock::derive_seed(seed, "call", prompt));
  switch (*kind) {
    case PromptKind::Survey: return mock::survey_response(profile, draws);
    case PromptKind::Bfi: return mock::bfi_response(profile, prompt, draws);
    case PromptKind::SimulationStep: return mock::sim_response(profile, prompt, false, seed, draws);
    case PromptKind::ForcedInvest: return mock::sim_response(profile, prompt, true, seed, draws);
  }
  throw UnrecognizedPrompt("unhandled prompt kind");
}

class MockPolicyBackend final : public ChatBackend {
 public:
  explicit MockPolicyBackend(std::uint64_t seed) : seed_(seed) {}

  RawCompletion complete(const CompletionRequest& request) override {
    auto start = std::chrono::steady_clock::now();
    std::string text = mock_policy_respond(request.prompt, seed_);
    return RawCompletion{std::move(text), std::chrono::steady_clock::now() - start, label()};
  }

  std::string label() const override { return "mock:" + std::to_string(seed_); }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace traitsim
