#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "traitsim/error.hpp"

namespace traitsim::csv {

using Row = std::vector<std::string>;

// RFC 4180 subset: comma separated, double-quoted fields with "" escapes,
// LF or CRLF line endings. Lines starting with '#' are comments.
inline std::vector<Row> parse(std::string_view content) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool at_line_start = true;
  bool field_started = false;

  auto end_row = [&] {
    if (field_started || !row.empty()) {
      row.push_back(std::move(field));
      rows.push_back(std::move(row));
    }
    row.clear();
    field.clear();
    field_started = false;
    at_line_start = true;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (at_line_start && c == '#') {
      while (i < content.size() && content[i] != '\n') ++i;
      continue;
    }
    at_line_start = false;
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted CSV field");
  end_row();
  return rows;
}

inline std::string quote(std::string_view field) {
  bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos ||
               (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

inline std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += quote(row[i]);
  }
  out.push_back('\n');
  return out;
}

// Header-addressed view over parsed rows.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<Row> rows) {
    if (rows.empty()) throw ParseError("CSV table has no header");
    header_ = std::move(rows.front());
    rows.erase(rows.begin());
    rows_ = std::move(rows);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) {
        throw ParseError("CSV row has " + std::to_string(r.size()) +
                         " fields, header has " + std::to_string(header_.size()));
      }
    }
  }

  static Table from_string(std::string_view content) { return Table(parse(content)); }

  static Table from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
  }

  const Row& header() const noexcept { return header_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == name) return i;
    }
    throw ParseError("CSV column '" + std::string(name) + "' not found");
  }
  bool has_column(std::string_view name) const noexcept {
    for (const auto& h : header_) {
      if (h == name) return true;
    }
    return false;
  }
  const std::string& at(std::size_t row, std::string_view col) const {
    return rows_.at(row).at(column(col));
  }

 private:
  Row header_;
  std::vector<Row> rows_;
};

}  // namespace traitsim::csv
