#pragma once

#include <algorithm>
#include <cstddef>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "traitsim/csv.hpp"
#include "traitsim/embedded_data.hpp"
#include "traitsim/error.hpp"
#include "traitsim/text.hpp"

namespace traitsim {

// One investable company. `risk` is the probability of losing the whole
// stake; `roi` is the return on success.
struct CompanySpec {
  std::string name;
  double roi = 0.0;
  double risk = 0.0;
  std::optional<std::string> descriptor;
  // Verbatim prompt renderings. The default catalog carries the exact lines
  // of the original task prompt, quirks included; other catalogs fall back to
  // a generic format.
  std::optional<std::string> listing;
  std::optional<std::string> tally_label;

  std::string listing_line() const {
    if (listing) return *listing;
    std::string out = "- " + name;
    if (descriptor) out += " (" + *descriptor + ")";
    out += ", return: " + text::format_double(roi * 100.0) +
           "%, risk: " + text::format_double(risk);
    return out;
  }

  std::string tally_prefix() const {
    return tally_label ? *tally_label : name + ": ";
  }
};

// Expected value of staking `stake` on `company`: the stake grows by roi
// with probability (1 - risk) and is lost otherwise. Rates are taken at
// basis-point resolution and multiplied as integers, so companies designed
// with equal EV compare equal at every stake.
inline double expected_value(const CompanySpec& company, double stake) {
  const long long roi_bp = std::llround(company.roi * 10000.0);
  const long long risk_bp = std::llround(company.risk * 10000.0);
  const long long factor = (10000 + roi_bp) * (10000 - risk_bp);
  return stake * static_cast<double>(factor) / 1e8;
}

using Catalog = std::vector<CompanySpec>;

inline void validate_catalog(const Catalog& catalog) {
  if (catalog.empty()) throw ConfigError("catalog is empty");
  std::set<std::string, std::less<>> names;
  for (const auto& c : catalog) {
    if (c.name.empty()) throw ConfigError("catalog entry without a name");
    if (!(c.risk >= 0.0 && c.risk <= 1.0)) {
      throw ConfigError("risk of " + c.name + " outside [0,1]");
    }
    if (!(c.roi >= 0.0)) throw ConfigError("negative roi for " + c.name);
    if (!names.insert(c.name).second) {
      throw ConfigError("duplicate company name " + c.name);
    }
  }
}

// Columns: name, roi, risk, descriptor[, listing, tally_label]. Empty
// optional cells are absent values.
inline Catalog parse_catalog(std::string_view content) {
  auto table = csv::Table::from_string(content);
  auto opt = [&](std::size_t r, std::string_view col) -> std::optional<std::string> {
    if (!table.has_column(col)) return std::nullopt;
    const auto& v = table.at(r, col);
    if (v.empty()) return std::nullopt;
    return v;
  };
  Catalog out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    CompanySpec c;
    c.name = std::string(text::trim(table.at(r, "name")));
    c.roi = text::parse_double(table.at(r, "roi"));
    c.risk = text::parse_double(table.at(r, "risk"));
    c.descriptor = opt(r, "descriptor");
    c.listing = opt(r, "listing");
    c.tally_label = opt(r, "tally_label");
    out.push_back(std::move(c));
  }
  validate_catalog(out);
  return out;
}

inline Catalog load_catalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open catalog " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_catalog(ss.str());
  } catch (const ParseError& e) {
    throw ConfigError("catalog " + path + ": " + e.what());
  }
}

// Diamond, Platinum, Emerald, Ruby, Sapphire.
inline const Catalog& default_catalog() {
  static const Catalog catalog = parse_catalog(embedded::kDefaultCatalog);
  return catalog;
}

inline const CompanySpec* find_company(const Catalog& catalog, std::string_view name) {
  auto it = std::find_if(catalog.begin(), catalog.end(),
                         [&](const CompanySpec& c) { return c.name == name; });
  return it == catalog.end() ? nullptr : &*it;
}

}  // namespace traitsim
