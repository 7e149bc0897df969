#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "traitsim/error.hpp"

namespace traitsim {

enum class TraitLevel : std::uint8_t { Low = 0, Medium = 1, High = 2 };

// Five-factor traits in the fixed O, C, E, A, N order used everywhere:
// prompt headers, design-matrix columns and CSV columns.
enum class Trait : std::uint8_t {
  Openness = 0,
  Conscientiousness = 1,
  Extraversion = 2,
  Agreeableness = 3,
  Neuroticism = 4,
};

inline constexpr std::size_t kTraitCount = 5;
inline constexpr std::size_t kGridSize = 243;  // 3^5

inline constexpr std::array<Trait, kTraitCount> kAllTraits = {
    Trait::Openness, Trait::Conscientiousness, Trait::Extraversion,
    Trait::Agreeableness, Trait::Neuroticism};

inline constexpr std::array<TraitLevel, 3> kAllLevels = {
    TraitLevel::Low, TraitLevel::Medium, TraitLevel::High};

constexpr std::size_t index_of(Trait t) noexcept {
  return static_cast<std::size_t>(t);
}

// Single-letter symbol (O, C, E, A, N).
constexpr std::string_view trait_symbol(Trait t) noexcept {
  constexpr std::array<std::string_view, kTraitCount> kSymbols = {
      "O", "C", "E", "A", "N"};
  return kSymbols[index_of(t)];
}

// Label as it appears in the persona header of every prompt.
constexpr std::string_view trait_label(Trait t) noexcept {
  constexpr std::array<std::string_view, kTraitCount> kLabels = {
      "Openness to Experience", "Conscientiousness", "Extraversion",
      "Agreeableness", "Neuroticism"};
  return kLabels[index_of(t)];
}

// Short trait name used in summary tables.
constexpr std::string_view trait_name(Trait t) noexcept {
  switch (t) {
    case Trait::Openness: return "Openness";
    case Trait::Conscientiousness: return "Conscientiousness";
    case Trait::Extraversion: return "Extraversion";
    case Trait::Agreeableness: return "Agreeableness";
    case Trait::Neuroticism: return "Neuroticism";
  }
  return "?";
}

constexpr std::string_view level_name(TraitLevel l) noexcept {
  switch (l) {
    case TraitLevel::Low: return "Low";
    case TraitLevel::Medium: return "Medium";
    case TraitLevel::High: return "High";
  }
  return "?";
}

constexpr char level_initial(TraitLevel l) noexcept {
  return level_name(l)[0];
}

inline Trait parse_trait_symbol(std::string_view s) {
  for (Trait t : kAllTraits) {
    if (trait_symbol(t) == s) return t;
  }
  throw ParseError("unknown trait symbol '" + std::string(s) + "'");
}

// Accepts exactly "Low", "Medium" or "High".
inline TraitLevel parse_level(std::string_view s) {
  for (TraitLevel l : kAllLevels) {
    if (level_name(l) == s) return l;
  }
  throw ParseError("invalid trait level '" + std::string(s) + "'");
}

// Centered ordinal coding used by the regression design matrix.
constexpr int encode_level(TraitLevel l) noexcept {
  return static_cast<int>(l) - 1;
}

class PersonaProfile {
 public:
  constexpr PersonaProfile() = default;
  constexpr explicit PersonaProfile(std::array<TraitLevel, kTraitCount> levels)
      : levels_(levels) {}
  constexpr PersonaProfile(TraitLevel o, TraitLevel c, TraitLevel e,
                           TraitLevel a, TraitLevel n)
      : levels_{o, c, e, a, n} {}

  constexpr TraitLevel level(Trait t) const noexcept {
    return levels_[index_of(t)];
  }
  constexpr int encoded(Trait t) const noexcept {
    return encode_level(level(t));
  }
  constexpr const std::array<TraitLevel, kTraitCount>& levels() const noexcept {
    return levels_;
  }

  // Position in the lexicographic grid, 0..242.
  constexpr std::size_t grid_index() const noexcept {
    std::size_t idx = 0;
    for (TraitLevel l : levels_) idx = idx * 3 + static_cast<std::size_t>(l);
    return idx;
  }

  // "L-M-H-H-L": level initials in O, C, E, A, N order.
  std::string id() const {
    std::string out;
    out.reserve(2 * kTraitCount - 1);
    for (std::size_t i = 0; i < kTraitCount; ++i) {
      if (i > 0) out.push_back('-');
      out.push_back(level_initial(levels_[i]));
    }
    return out;
  }

  static PersonaProfile from_id(std::string_view id) {
    if (id.size() != 2 * kTraitCount - 1) {
      throw ParseError("malformed persona id '" + std::string(id) + "'");
    }
    std::array<TraitLevel, kTraitCount> levels{};
    for (std::size_t i = 0; i < kTraitCount; ++i) {
      if (i > 0 && id[2 * i - 1] != '-') {
        throw ParseError("malformed persona id '" + std::string(id) + "'");
      }
      switch (id[2 * i]) {
        case 'L': levels[i] = TraitLevel::Low; break;
        case 'M': levels[i] = TraitLevel::Medium; break;
        case 'H': levels[i] = TraitLevel::High; break;
        default:
          throw ParseError("malformed persona id '" + std::string(id) + "'");
      }
    }
    return PersonaProfile(levels);
  }

  static constexpr PersonaProfile from_grid_index(std::size_t idx) {
    std::array<TraitLevel, kTraitCount> levels{};
    for (std::size_t i = kTraitCount; i-- > 0;) {
      levels[i] = static_cast<TraitLevel>(idx % 3);
      idx /= 3;
    }
    return PersonaProfile(levels);
  }

  friend constexpr bool operator==(const PersonaProfile&,
                                   const PersonaProfile&) = default;
  friend constexpr auto operator<=>(const PersonaProfile&,
                                    const PersonaProfile&) = default;

 private:
  std::array<TraitLevel, kTraitCount> levels_{};
};

// All 243 profiles, lexicographic over (O, C, E, A, N) with Low < Medium < High.
inline std::vector<PersonaProfile> generate_grid() {
  std::vector<PersonaProfile> grid;
  grid.reserve(kGridSize);
  for (std::size_t i = 0; i < kGridSize; ++i) {
    grid.push_back(PersonaProfile::from_grid_index(i));
  }
  return grid;
}

}  // namespace traitsim
