#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "traitsim/error.hpp"

namespace traitsim {

using Json = nlohmann::json;

namespace detail {

// End (exclusive) of the brace-balanced span starting at `open`, honouring
// string literals and escapes. nullopt when the braces never balance.
inline std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// First well-formed JSON object in free-form model output. Code fences and
// surrounding prose are skipped because only brace-delimited spans are
// considered. Throws ParseError when no object can be recovered.
inline Json extract_json(std::string_view raw) {
  std::size_t pos = 0;
  while ((pos = raw.find('{', pos)) != std::string_view::npos) {
    if (auto end = detail::balanced_end(raw, pos)) {
      auto parsed = Json::parse(raw.substr(pos, *end - pos), nullptr,
                                /*allow_exceptions=*/false);
      if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    ++pos;
  }
  throw ParseError("no JSON object found in model output");
}

}  // namespace traitsim
