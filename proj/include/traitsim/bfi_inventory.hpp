#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "traitsim/embedded_data.hpp"
#include "traitsim/error.hpp"
#include "traitsim/persona.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

struct BfiItem {
  int number = 0;
  Trait trait = Trait::Openness;
  bool reverse_keyed = false;
  std::string text;
};

inline constexpr int kBfiScaleMin = 1;
inline constexpr int kBfiScaleMax = 5;

// Reverse-keyed items are scored as (min + max) - answer, i.e. 6 - x.
constexpr int bfi_item_score(int answer, bool reverse_keyed) noexcept {
  return reverse_keyed ? (kBfiScaleMin + kBfiScaleMax) - answer : answer;
}

class BfiInventory {
 public:
  explicit BfiInventory(std::vector<BfiItem> items) : items_(std::move(items)) {
    if (items_.empty()) throw ConfigError("inventory has no items");
  }

  // Tab separated: number, trait symbol, '+' or '-', statement.
  static BfiInventory parse(std::string_view tsv) {
    std::vector<BfiItem> items;
    for (std::string_view line : text::split_lines(tsv)) {
      if (text::trim(line).empty() || line.front() == '#') continue;
      std::vector<std::string_view> cols;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
          cols.push_back(line.substr(start, i - start));
          start = i + 1;
        }
      }
      if (cols.size() != 4) {
        throw ParseError("inventory line needs 4 tab-separated fields: " + std::string(line));
      }
      BfiItem item;
      item.number = static_cast<int>(text::parse_int(cols[0]));
      item.trait = parse_trait_symbol(text::trim(cols[1]));
      auto key = text::trim(cols[2]);
      if (key != "+" && key != "-") {
        throw ParseError("inventory keying must be + or -: " + std::string(line));
      }
      item.reverse_keyed = key == "-";
      item.text = std::string(text::trim(cols[3]));
      items.push_back(std::move(item));
    }
    return BfiInventory(std::move(items));
  }

  const std::vector<BfiItem>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }

  std::size_t item_count(Trait t) const noexcept {
    std::size_t n = 0;
    for (const auto& it : items_) n += it.trait == t;
    return n;
  }
  std::size_t reverse_count(Trait t) const noexcept {
    std::size_t n = 0;
    for (const auto& it : items_) n += it.trait == t && it.reverse_keyed;
    return n;
  }

 private:
  std::vector<BfiItem> items_;
};

// The 44-item Big Five Inventory shipped in data/bfi44.tsv.
inline const BfiInventory& default_bfi_inventory() {
  static const BfiInventory inv = BfiInventory::parse(embedded::kBfiInventory);
  return inv;
}

}  // namespace traitsim
