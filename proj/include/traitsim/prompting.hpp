#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "traitsim/bfi_inventory.hpp"
#include "traitsim/catalog.hpp"
#include "traitsim/embedded_data.hpp"
#include "traitsim/error.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

enum class PromptKind { Survey, SimulationStep, ForcedInvest, Bfi };

inline constexpr int kResearchCap = 5;
inline constexpr std::size_t kSurveyQuestionCount = 9;

// Phrases that identify each rendered prompt kind.
inline constexpr std::string_view kSurveySentinel =
    "You will be presented with a series of questions";
inline constexpr std::string_view kSimSentinel = "<research>";
inline constexpr std::string_view kBfiSentinel = "I see myself as someone who...";

// Per-company research counts, kept in catalog order.
class ResearchTally {
 public:
  explicit ResearchTally(const Catalog& catalog) {
    counts_.reserve(catalog.size());
    for (const auto& c : catalog) counts_.emplace_back(c.name, 0);
  }

  int count(std::string_view company) const {
    return counts_[position(company)].second;
  }

  void increment(std::string_view company) {
    auto& slot = counts_[position(company)];
    if (slot.second >= kResearchCap) {
      throw InvalidAction(slot.first + " has already been researched " +
                          std::to_string(kResearchCap) + " times");
    }
    ++slot.second;
  }

  void set(std::string_view company, int n) {
    if (n < 0 || n > kResearchCap) {
      throw InvalidAction("research count out of range for " + std::string(company));
    }
    counts_[position(company)].second = n;
  }

  bool contains(std::string_view company) const noexcept {
    return std::any_of(counts_.begin(), counts_.end(),
                       [&](const auto& e) { return e.first == company; });
  }

  int total() const noexcept {
    int n = 0;
    for (const auto& e : counts_) n += e.second;
    return n;
  }

  int capacity() const noexcept { return kResearchCap * static_cast<int>(counts_.size()); }

  bool all_at_cap() const noexcept {
    return std::all_of(counts_.begin(), counts_.end(),
                       [](const auto& e) { return e.second >= kResearchCap; });
  }

  const std::vector<std::pair<std::string, int>>& entries() const noexcept {
    return counts_;
  }

  friend bool operator==(const ResearchTally&, const ResearchTally&) = default;

 private:
  std::size_t position(std::string_view company) const {
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i].first == company) return i;
    }
    throw InvalidAction("unknown company '" + std::string(company) + "'");
  }

  std::vector<std::pair<std::string, int>> counts_;
};

inline std::string persona_trait_lines(const PersonaProfile& profile) {
  std::string out;
  for (Trait t : kAllTraits) {
    if (!out.empty()) out.push_back('\n');
    out.append(trait_label(t));
    out.append(": ");
    out.append(level_name(profile.level(t)));
  }
  return out;
}

// Shared opening block of the survey and inventory prompts.
inline std::string persona_header(const PersonaProfile& profile) {
  return text::render(text::chomp(embedded::kPersonaHeaderTemplate),
                      {{"trait_lines", persona_trait_lines(profile)}});
}

inline std::string render_survey_prompt(const PersonaProfile& profile) {
  return text::render(text::chomp(embedded::kSurveyTemplate),
                      {{"persona_header", persona_header(profile)}});
}

inline std::string render_sim_prompt(const PersonaProfile& profile,
                                     const ResearchTally& tally, bool forced,
                                     const Catalog& catalog = default_catalog()) {
  if (tally.entries().size() != catalog.size() ||
      !std::all_of(catalog.begin(), catalog.end(), [&](const auto& c) { return tally.contains(c.name); })) {
    throw TemplateError("research tally does not cover the catalog");
  }
  std::string company_lines, tally_lines, names;
  for (const auto& c : catalog) {
    if (!company_lines.empty()) {
      company_lines.push_back('\n');
      tally_lines.push_back('\n');
      names.append(", ");
    }
    company_lines += c.listing_line();
    tally_lines += c.tally_prefix() + std::to_string(tally.count(c.name)) + " out of " +
                   std::to_string(kResearchCap) + " times";
    names += "\"" + c.name + "\"";
  }
  std::string_view selection =
      forced ? embedded::kSimForced : embedded::kSimSelection;
  return text::render(text::chomp(embedded::kSimTemplate),
                      {{"trait_lines", persona_trait_lines(profile)},
                       {"company_lines", company_lines},
                       {"tally_lines", tally_lines},
                       {"company_names", names},
                       {"selection", std::string(text::chomp(selection))}});
}

inline std::string render_bfi_prompt(const PersonaProfile& profile,
                                     const BfiInventory& inventory = default_bfi_inventory()) {
  std::string items;
  for (const auto& item : inventory.items()) {
    if (!items.empty()) items.push_back('\n');
    items += std::to_string(item.number) + ". " + item.text;
  }
  return text::render(text::chomp(embedded::kBfiTemplate),
                      {{"persona_header", persona_header(profile)},
                       {"items", items},
                       {"item_count", std::to_string(inventory.size())}});
}

// Classifies a rendered prompt by its sentinel phrases.
inline std::optional<PromptKind> detect_prompt_kind(std::string_view prompt) {
  if (prompt.find(kSimSentinel) != std::string_view::npos) {
    return prompt.find(text::chomp(embedded::kSimForced)) != std::string_view::npos
               ? PromptKind::ForcedInvest
               : PromptKind::SimulationStep;
  }
  if (prompt.find(kBfiSentinel) != std::string_view::npos) return PromptKind::Bfi;
  if (prompt.find(kSurveySentinel) != std::string_view::npos) return PromptKind::Survey;
  return std::nullopt;
}

// Recovers the profile from the "<Trait label>: <Level>" lines of a prompt.
inline PersonaProfile parse_persona_header(std::string_view prompt) {
  std::array<std::optional<TraitLevel>, kTraitCount> found{};
  for (std::string_view line : text::split_lines(prompt)) {
    line = text::trim(line);
    for (Trait t : kAllTraits) {
      std::string prefix = std::string(trait_label(t)) + ": ";
      if (text::starts_with(line, prefix) && !found[index_of(t)]) {
        found[index_of(t)] = parse_level(text::trim(line.substr(prefix.size())));
      }
    }
  }
  std::array<TraitLevel, kTraitCount> levels{};
  for (Trait t : kAllTraits) {
    if (!found[index_of(t)]) {
      throw ParseError("prompt has no " + std::string(trait_label(t)) + " line");
    }
    levels[index_of(t)] = *found[index_of(t)];
  }
  return PersonaProfile(levels);
}

// Reads the "<prefix><n> out of 5 times" block between <research> tags.
inline ResearchTally parse_research_block(std::string_view prompt, const Catalog& catalog) {
  ResearchTally tally(catalog);
  auto open = prompt.find("<research>");
  auto close = prompt.find("</research>");
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw ParseError("prompt has no research block");
  }
  std::string_view block = prompt.substr(open, close - open);
  for (std::string_view line : text::split_lines(block)) {
    for (const auto& c : catalog) {
      std::string prefix = c.tally_prefix();
      if (text::starts_with(line, prefix)) {
        auto rest = line.substr(prefix.size());
        auto sp = rest.find(' ');
        tally.set(c.name, static_cast<int>(text::parse_int(rest.substr(0, sp))));
      }
    }
  }
  return tally;
}

}  // namespace traitsim
