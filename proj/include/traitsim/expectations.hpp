#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "traitsim/behavior.hpp"
#include "traitsim/csv.hpp"
#include "traitsim/embedded_data.hpp"
#include "traitsim/error.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/stats.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

enum class ExpectedSign { Positive, Negative, None };

constexpr std::string_view sign_token(ExpectedSign s) noexcept {
  switch (s) {
    case ExpectedSign::Positive: return "+";
    case ExpectedSign::Negative: return "-";
    case ExpectedSign::None: return "none";
  }
  return "?";
}

inline ExpectedSign parse_sign(std::string_view s) {
  s = text::trim(s);
  if (s == "+") return ExpectedSign::Positive;
  if (s == "-") return ExpectedSign::Negative;
  if (s == "none") return ExpectedSign::None;
  throw ParseError("expected sign must be +, - or none: '" + std::string(s) + "'");
}

struct ExpectedCell {
  ExpectedSign sign = ExpectedSign::None;
  std::string citation;
};

// Direction of each (behavior, trait) relationship reported by the human
// studies, with the source of each cell.
class ExpectedSignTable {
 public:
  static ExpectedSignTable parse(std::string_view content) {
    auto table = csv::Table::from_string(content);
    ExpectedSignTable out;
    std::array<std::array<bool, kTraitCount>, kAllBehaviors.size()> seen{};
    for (std::size_t r = 0; r < table.size(); ++r) {
      Behavior b = parse_behavior(table.at(r, "behavior"));
      Trait t = parse_trait_symbol(text::trim(table.at(r, "trait")));
      auto& cell = out.cells_[static_cast<std::size_t>(b)][index_of(t)];
      cell.sign = parse_sign(table.at(r, "expected_sign"));
      cell.citation = table.has_column("citation") ? table.at(r, "citation") : "";
      seen[static_cast<std::size_t>(b)][index_of(t)] = true;
    }
    for (auto b : kAllBehaviors) {
      for (auto t : kAllTraits) {
        if (!seen[static_cast<std::size_t>(b)][index_of(t)]) {
          throw ParseError("expected-sign table lacks " + std::string(behavior_name(b)) + "/" +
                           std::string(trait_symbol(t)));
        }
      }
    }
    return out;
  }

  static Behavior parse_behavior(std::string_view s) {
    s = text::trim(s);
    for (auto b : kAllBehaviors) {
      if (behavior_name(b) == s) return b;
    }
    throw ParseError("unknown behavior '" + std::string(s) + "'");
  }

  const ExpectedCell& cell(Behavior b, Trait t) const noexcept {
    return cells_[static_cast<std::size_t>(b)][index_of(t)];
  }
  ExpectedSign sign(Behavior b, Trait t) const noexcept { return cell(b, t).sign; }

 private:
  std::array<std::array<ExpectedCell, kTraitCount>, kAllBehaviors.size()> cells_{};
};

inline const ExpectedSignTable& default_expected_signs() {
  static const ExpectedSignTable table = ExpectedSignTable::parse(embedded::kExpectedSigns);
  return table;
}

enum class Verdict { Match, Mismatch, NoBenchmark, NotSignificant };

constexpr std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::Match: return "Match";
    case Verdict::Mismatch: return "Mismatch";
    case Verdict::NoBenchmark: return "NoBenchmark";
    case Verdict::NotSignificant: return "NotSignificant";
  }
  return "?";
}

struct SignCell {
  Trait trait = Trait::Openness;
  double beta = 0.0;
  double p = 1.0;
  std::string observed_sign;  // "+", "-" or "0"
  ExpectedSign expected = ExpectedSign::None;
  // "yes"/"no" at the chosen level; "unreported" when the source has no p-value.
  std::string significant;
  Verdict verdict = Verdict::NoBenchmark;
};

struct SignReport {
  std::string behavior;
  std::array<SignCell, kTraitCount> cells{};

  const SignCell& operator[](Trait t) const noexcept { return cells[index_of(t)]; }
};

// A NaN p-value marks a coefficient reported without significance (for
// example a published table); such cells are judged on sign alone.
inline SignReport compare_signs(const stats::RegressionResult& result, Behavior behavior,
                                const ExpectedSignTable& expected, double alpha = 0.05) {
  SignReport report;
  report.behavior = result.behavior;
  for (Trait t : kAllTraits) {
    const auto& coef = result[t];
    SignCell cell;
    cell.trait = t;
    cell.beta = coef.beta;
    cell.p = coef.p;
    cell.observed_sign = coef.beta > 0 ? "+" : coef.beta < 0 ? "-" : "0";
    cell.expected = expected.sign(behavior, t);
    const bool unreported = std::isnan(coef.p);
    cell.significant = unreported ? "unreported" : (coef.p < alpha ? "yes" : "no");
    if (cell.expected == ExpectedSign::None) {
      cell.verdict = Verdict::NoBenchmark;
    } else if (!unreported && !(coef.p < alpha)) {
      cell.verdict = Verdict::NotSignificant;
    } else {
      const bool match = (cell.expected == ExpectedSign::Positive && coef.beta > 0) ||
                         (cell.expected == ExpectedSign::Negative && coef.beta < 0);
      cell.verdict = match ? Verdict::Match : Verdict::Mismatch;
    }
    report.cells[index_of(t)] = cell;
  }
  return report;
}

// Coefficients published without standard errors: CSV columns
// behavior, trait, beta. p-values are NaN ("unreported").
inline std::vector<std::pair<Behavior, stats::RegressionResult>> parse_coefficient_fixture(
    std::string_view content) {
  auto table = csv::Table::from_string(content);
  std::map<Behavior, stats::RegressionResult> by_behavior;
  std::map<Behavior, std::array<bool, kTraitCount>> seen;
  for (std::size_t r = 0; r < table.size(); ++r) {
    Behavior b = ExpectedSignTable::parse_behavior(table.at(r, "behavior"));
    Trait t = parse_trait_symbol(text::trim(table.at(r, "trait")));
    auto& res = by_behavior[b];
    res.behavior = std::string(behavior_name(b));
    auto& c = res.coefficients[index_of(t)];
    c.beta = text::parse_double(table.at(r, "beta"));
    c.beta_raw = std::nan("");
    c.std_error = std::nan("");
    c.t = std::nan("");
    c.p = std::nan("");
    seen[b][index_of(t)] = true;
  }
  std::vector<std::pair<Behavior, stats::RegressionResult>> out;
  for (auto& [b, res] : by_behavior) {
    for (Trait t : kAllTraits) {
      if (!seen[b][index_of(t)]) {
        throw ParseError("fixture lacks " + res.behavior + "/" + std::string(trait_symbol(t)));
      }
    }
    out.emplace_back(b, std::move(res));
  }
  return out;
}

}  // namespace traitsim
