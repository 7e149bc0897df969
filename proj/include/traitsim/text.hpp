#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "traitsim/error.hpp"

namespace traitsim::text {

// 64-bit FNV-1a. Used for data-file checksums and for seeding the mock
// policy, so it must stay stable across platforms.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Data files end with a newline; templates are spliced without it.
inline std::string_view chomp(std::string_view s) noexcept {
  if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) noexcept {
  return s.substr(0, prefix.size()) == prefix;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

// Replaces every {{name}} with its binding. Throws TemplateError for an
// unbound or unterminated placeholder; no "{{" survives a successful render.
inline std::string render(std::string_view tmpl,
                          const std::map<std::string, std::string, std::less<>>& bindings) {
  std::string out;
  out.reserve(tmpl.size() + 512);
  std::size_t pos = 0;
  while (true) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw TemplateError("unterminated placeholder in template");
    }
    out.append(tmpl.substr(pos, open - pos));
    std::string_view name = tmpl.substr(open + 2, close - open - 2);
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw TemplateError("unbound placeholder {{" + std::string(name) + "}}");
    }
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

// Shortest round-trippable decimal for CSV output. Deterministic for a given
// libc; NaN prints as "nan", infinities as "inf"/"-inf".
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  // Shortest text that reads back to the same double.
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  std::string tmp(trim(s));
  if (tmp == "nan") return std::nan("");
  if (tmp == "inf") return HUGE_VAL;
  if (tmp == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw ParseError("not a number: '" + tmp + "'");
  }
  return v;
}

inline long long parse_int(std::string_view s) {
  std::string tmp(trim(s));
  char* end = nullptr;
  long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw ParseError("not an integer: '" + tmp + "'");
  }
  return v;
}

}  // namespace traitsim::text
