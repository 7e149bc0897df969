#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace traitsim {

enum class BehaviorSource { Survey, Simulation };

// The five measured behaviors of one persona. Absent values mean "no
// evidence" and are excluded from regressions, never treated as zero.
struct BehaviorVector {
  std::optional<double> independent_learning;
  double impulsivity = 0.0;
  double risk_appetite = 0.0;
  double env_interest = 0.0;
  std::optional<double> env_investment;  // never set for survey-sourced vectors
  BehaviorSource source = BehaviorSource::Survey;
};

enum class Behavior {
  IndependentLearning,
  Impulsivity,
  RiskAppetite,
  EnvInterest,
  EnvInvestment,
};

inline constexpr std::array<Behavior, 5> kAllBehaviors = {
    Behavior::IndependentLearning, Behavior::Impulsivity, Behavior::RiskAppetite,
    Behavior::EnvInterest, Behavior::EnvInvestment};

constexpr std::string_view behavior_name(Behavior b) noexcept {
  switch (b) {
    case Behavior::IndependentLearning: return "independent_learning";
    case Behavior::Impulsivity: return "impulsivity";
    case Behavior::RiskAppetite: return "risk_appetite";
    case Behavior::EnvInterest: return "env_interest";
    case Behavior::EnvInvestment: return "env_investment";
  }
  return "?";
}

inline std::optional<double> behavior_value(const BehaviorVector& v, Behavior b) {
  switch (b) {
    case Behavior::IndependentLearning: return v.independent_learning;
    case Behavior::Impulsivity: return v.impulsivity;
    case Behavior::RiskAppetite: return v.risk_appetite;
    case Behavior::EnvInterest: return v.env_interest;
    case Behavior::EnvInvestment: return v.env_investment;
  }
  return std::nullopt;
}

}  // namespace traitsim
