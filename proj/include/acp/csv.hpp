#pragma once

#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "acp/error.hpp"

namespace acp::csv {

struct Record {
  std::size_t line = 0;  // 1-based line on which the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines. Accepts LF or CRLF; strips a UTF-8 BOM. Blank lines are skipped.
[[nodiscard]] inline std::vector<Record> parse(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Record> out;
  Record rec;
  std::string field;
  std::size_t line = 1;
  bool in_quotes = false;
  bool field_started = false;
  bool record_started = false;
  rec.line = 1;

  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (record_started) {
      end_field();
      out.push_back(std::move(rec));
    }
    rec = Record{};
    record_started = false;
  };

  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (in_quotes) {
      if (c == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field.push_back('"');
          ++k;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (!record_started && c != '\n' && c != '\r') {
      record_started = true;
      rec.line = line;
    }
    switch (c) {
      case '"':
        if (field_started) throw ParseError(line, "unexpected quote inside unquoted field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError(line, "unterminated quoted field");
  end_record();
  return out;
}

[[nodiscard]] inline std::vector<Record> read(std::istream& in) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse(text);
}

[[nodiscard]] inline std::string escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                            (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) os << ',';
    os << escape(fields[k]);
  }
  os << '\n';
}

/// Checks that the first record is exactly `expected` and every later
/// record has the same width.
inline void require_header(const std::vector<Record>& records,
                           const std::vector<std::string>& expected) {
  if (records.empty()) throw ParseError(1, "missing header row");
  if (records.front().fields != expected) {
    std::string want;
    for (const auto& f : expected) want += (want.empty() ? "" : ",") + f;
    throw ParseError(records.front().line, "unexpected header, expected '" + want + "'");
  }
  for (std::size_t k = 1; k < records.size(); ++k) {
    if (records[k].fields.size() != expected.size()) {
      throw ParseError(records[k].line, "expected " + std::to_string(expected.size()) +
                                            " fields, got " +
                                            std::to_string(records[k].fields.size()));
    }
  }
}

}  // namespace acp::csv
