#pragma once

#include <chrono>
#include <charconv>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "acp/core.hpp"
#include "acp/csv.hpp"
#include "acp/error.hpp"
#include "acp/numeric.hpp"
#include "acp/table_row.hpp"

namespace acp::ingest {

enum class Format { kCsv, kJson };

struct ScalarMetrics {
  std::string author_id;
  std::int64_t papers = 0;
  std::int64_t cites = 0;
  std::int64_t h = 0;

  friend bool operator==(const ScalarMetrics&, const ScalarMetrics&) = default;
};

using ScalarMap = std::map<std::string, ScalarMetrics>;

inline const std::vector<std::string> kImpactHeader = {"journal", "year", "indicator", "value"};
inline const std::vector<std::string> kEventsHeader = {"author_id", "group", "kind",
                                                       "journal",   "year",  "count"};
inline const std::vector<std::string> kScalarsHeader = {"author_id", "papers", "cites", "h"};

namespace detail {

inline std::int64_t parse_int(std::string_view token, std::size_t line, std::string_view what) {
  std::int64_t v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw ParseError(line, "invalid " + std::string(what) + " '" + std::string(token) + "'");
  }
  return v;
}

inline double parse_real(std::string_view token, std::size_t line, std::string_view what) {
  bool ok = false;
  auto v = parse_optional_double(token, ok);
  if (!ok || !v) {
    throw ParseError(line, "invalid " + std::string(what) + " '" + std::string(token) + "'");
  }
  return *v;
}

inline EventKind parse_kind(std::string_view token, std::size_t line) {
  const auto k = lowercase(token);
  if (k == "publication") return EventKind::kPublication;
  if (k == "citation") return EventKind::kCitation;
  if (k == "reference") return EventKind::kReference;
  throw ParseError(line, "unknown event kind '" + std::string(token) + "'");
}

/// Rows from either format as string fields keyed by header order.
inline std::vector<csv::Record> rows_from_json(std::istream& in,
                                               const std::vector<std::string>& header) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError(0, "expected a JSON array of row objects");
  std::vector<csv::Record> out;
  out.push_back({0, header});
  std::size_t index = 0;
  for (const auto& obj : doc) {
    ++index;
    if (!obj.is_object()) throw ParseError(index, "row is not an object");
    csv::Record rec{index, {}};
    for (const auto& key : header) {
      if (!obj.contains(key)) throw ParseError(index, "missing field '" + key + "'");
      const auto& v = obj.at(key);
      if (v.is_string()) {
        rec.fields.push_back(v.get<std::string>());
      } else if (v.is_null()) {
        rec.fields.emplace_back();
      } else if (v.is_number_integer()) {
        rec.fields.push_back(std::to_string(v.get<std::int64_t>()));
      } else if (v.is_number()) {
        rec.fields.push_back(format_shortest(v.get<double>()));
      } else {
        throw ParseError(index, "field '" + key + "' has an unsupported type");
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<csv::Record> read_rows(std::istream& in, Format format,
                                          const std::vector<std::string>& header) {
  if (format == Format::kJson) return rows_from_json(in, header);
  auto rows = csv::read(in);
  csv::require_header(rows, header);
  return rows;
}

}  // namespace detail

/// Reads `journal,year,indicator,value` rows.
[[nodiscard]] inline ImpactTable load_impact_table(std::istream& in, Format format = Format::kCsv) {
  const auto rows = detail::read_rows(in, format, kImpactHeader);
  ImpactTable table;
  std::map<ImpactKey, std::size_t> first_line;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& f = rows[k].fields;
    const auto line = rows[k].line;
    if (f[0].empty()) throw ParseError(line, "empty journal");
    if (f[2].empty()) throw ParseError(line, "empty indicator");
    const JournalRef journal(f[0]);
    const int year = static_cast<int>(detail::parse_int(f[1], line, "year"));
    const IndicatorName indicator(f[2]);
    const double value = detail::parse_real(f[3], line, "value");
    if (value < 0.0) throw ParseError(line, "negative impact value");
    ImpactKey key{journal, year, indicator};
    if (auto it = first_line.find(key); it != first_line.end()) {
      throw ParseError(line, "duplicate key (" + f[0] + ", " + f[1] + ", " + f[2] +
                                 ") also on line " + std::to_string(it->second));
    }
    first_line.emplace(key, line);
    table.add(journal, year, indicator, value);
  }
  return table;
}

/// Reads `author_id,group,kind,journal,year,count` rows grouped by author.
/// Authors come back sorted by id; events keep file order.
[[nodiscard]] inline std::vector<AuthorCorpus> load_events(std::istream& in,
                                                           Format format = Format::kCsv) {
  const auto rows = detail::read_rows(in, format, kEventsHeader);
  std::map<std::string, AuthorCorpus> by_author;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& f = rows[k].fields;
    const auto line = rows[k].line;
    if (f[0].empty()) throw ParseError(line, "empty author_id");
    if (f[3].empty()) throw ParseError(line, "empty journal");
    const auto kind = detail::parse_kind(f[2], line);
    const int year = static_cast<int>(detail::parse_int(f[4], line, "year"));
    const auto count = detail::parse_int(f[5], line, "count");
    if (count < 1) throw ParseError(line, "count must be >= 1, got " + f[5]);

    auto& corpus = by_author[f[0]];
    corpus.author_id = f[0];
    if (!f[1].empty()) {
      if (corpus.group && *corpus.group != f[1]) {
        throw ParseError(line, "author '" + f[0] + "' has conflicting groups '" +
                                   *corpus.group + "' and '" + f[1] + "'");
      }
      corpus.group = f[1];
    }
    corpus.events.emplace_back(kind, JournalRef(f[3]), year, count);
  }
  std::vector<AuthorCorpus> out;
  out.reserve(by_author.size());
  for (auto& [id, corpus] : by_author) out.push_back(std::move(corpus));
  return out;
}

/// Reads `author_id,papers,cites,h`. Checks h <= papers and, when papers > 0,
/// h <= cites.
[[nodiscard]] inline ScalarMap load_scalars(std::istream& in) {
  const auto rows = detail::read_rows(in, Format::kCsv, kScalarsHeader);
  ScalarMap out;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& f = rows[k].fields;
    const auto line = rows[k].line;
    if (f[0].empty()) throw ParseError(line, "empty author_id");
    ScalarMetrics m{f[0], detail::parse_int(f[1], line, "papers"),
                    detail::parse_int(f[2], line, "cites"), detail::parse_int(f[3], line, "h")};
    if (m.papers < 0 || m.cites < 0 || m.h < 0) throw ParseError(line, "negative value");
    if (m.h > m.papers) throw ParseError(line, "h exceeds papers");
    if (m.papers > 0 && m.h > m.cites) throw ParseError(line, "h exceeds cites");
    if (!out.emplace(m.author_id, m).second) {
      throw ParseError(line, "duplicate author_id '" + m.author_id + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// profiles.csv: author_id,group,papers,cites,h, then seven columns per family.

[[nodiscard]] inline std::vector<std::string> profiles_header(
    const std::vector<IndicatorName>& families) {
  std::vector<std::string> h = {"author_id", "group", "papers", "cites", "h"};
  for (const auto& f : families) {
    for (auto prefix : kMeasurePrefixes) h.push_back(variable_name(prefix, f));
  }
  return h;
}

namespace detail {

inline std::vector<IndicatorName> families_from_header(const std::vector<std::string>& header,
                                                       std::size_t line) {
  static const std::vector<std::string> fixed = {"author_id", "group", "papers", "cites", "h"};
  if (header.size() < fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), header.begin()) ||
      (header.size() - fixed.size()) % kMeasurePrefixes.size() != 0) {
    throw ParseError(line, "unexpected profiles header");
  }
  std::vector<IndicatorName> families;
  for (std::size_t c = fixed.size(); c < header.size(); c += kMeasurePrefixes.size()) {
    const auto& first = header[c];
    if (!first.starts_with("p_")) throw ParseError(line, "unexpected column '" + first + "'");
    IndicatorName family(uppercase(first.substr(2)));
    for (std::size_t k = 0; k < kMeasurePrefixes.size(); ++k) {
      if (header[c + k] != variable_name(kMeasurePrefixes[k], family)) {
        throw ParseError(line, "unexpected column '" + header[c + k] + "'");
      }
    }
    families.push_back(family);
  }
  return families;
}

inline std::optional<std::int64_t> parse_optional_int(const std::string& token,
                                                      std::size_t line, std::string_view what) {
  if (token == kNaToken) return std::nullopt;
  return parse_int(token, line, what);
}

inline std::optional<double> parse_optional_real(const std::string& token, std::size_t line,
                                                 std::string_view what) {
  bool ok = false;
  auto v = parse_optional_double(token, ok);
  if (!ok) throw ParseError(line, "invalid " + std::string(what) + " '" + token + "'");
  return v;
}

}  // namespace detail

[[nodiscard]] inline std::vector<AuthorTableRow> load_profiles(std::istream& in,
                                                               Format format = Format::kCsv) {
  std::vector<csv::Record> rows;
  if (format == Format::kCsv) {
    rows = csv::read(in);
    if (rows.empty()) throw ParseError(1, "missing header row");
  } else {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(0, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("columns") || !doc.contains("rows")) {
      throw ParseError(0, "expected {\"columns\": [...], \"rows\": [...]}");
    }
    std::vector<std::string> header = doc.at("columns").get<std::vector<std::string>>();
    rows.push_back({0, header});
    std::size_t idx = 0;
    for (const auto& obj : doc.at("rows")) {
      ++idx;
      csv::Record rec{idx, {}};
      for (const auto& key : header) {
        if (!obj.contains(key)) throw ParseError(idx, "missing field '" + key + "'");
        const auto& v = obj.at(key);
        if (v.is_null()) rec.fields.emplace_back(kNaToken);
        else if (v.is_string()) rec.fields.push_back(v.get<std::string>());
        else if (v.is_number_integer()) rec.fields.push_back(std::to_string(v.get<std::int64_t>()));
        else if (v.is_number()) rec.fields.push_back(format_shortest(v.get<double>()));
        else throw ParseError(idx, "field '" + key + "' has an unsupported type");
      }
      rows.push_back(std::move(rec));
    }
  }
  const auto families = detail::families_from_header(rows.front().fields, rows.front().line);
  const std::size_t width = rows.front().fields.size();

  std::vector<AuthorTableRow> out;
  std::set<std::string> seen;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& f = rows[k].fields;
    const auto line = rows[k].line;
    if (f.size() != width) {
      throw ParseError(line, "expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(f.size()));
    }
    AuthorTableRow row;
    row.author_id = f[0];
    if (row.author_id.empty()) throw ParseError(line, "empty author_id");
    if (!seen.insert(row.author_id).second) {
      throw ParseError(line, "duplicate author_id '" + row.author_id + "'");
    }
    if (!f[1].empty() && f[1] != kNaToken) row.group = f[1];
    row.papers = detail::parse_optional_int(f[2], line, "papers");
    row.cites = detail::parse_optional_int(f[3], line, "cites");
    row.h = detail::parse_optional_int(f[4], line, "h");
    std::size_t c = 5;
    for (const auto& family : families) {
      FamilyColumns cols;
      cols.family = family;
      for (std::size_t m = 0; m < kMeasurePrefixes.size(); ++m, ++c) {
        measure_ref(cols, m) = detail::parse_optional_real(f[c], line, "value");
      }
      row.families.push_back(cols);
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// Writes profiles with shortest round-trip numbers (or fixed decimals when
/// `decimals` is set).
inline void write_profiles(std::ostream& os, const std::vector<AuthorTableRow>& rows,
                           Format format = Format::kCsv, std::optional<int> decimals = {}) {
  std::vector<IndicatorName> families;
  if (!rows.empty()) {
    for (const auto& f : rows.front().families) families.push_back(f.family);
  }
  const auto header = profiles_header(families);
  auto num = [&](std::optional<double> v) -> std::string {
    if (!v) return std::string(kNaToken);
    return decimals ? format_fixed(*v, *decimals) : format_shortest(*v);
  };
  auto integer = [](std::optional<std::int64_t> v) {
    return v ? std::to_string(*v) : std::string(kNaToken);
  };

  std::vector<std::vector<std::string>> table;
  for (const auto& row : rows) {
    std::vector<std::string> cells = {row.author_id, row.group.value_or(""),
                                      integer(row.papers), integer(row.cites), integer(row.h)};
    if (row.families.size() != families.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "author '" + row.author_id + "' has a different family set");
    }
    for (std::size_t k = 0; k < row.families.size(); ++k) {
      if (row.families[k].family != families[k]) {
        throw Error(ErrorCode::kInvalidArgument,
                    "author '" + row.author_id + "' has a different family order");
      }
      for (std::size_t m = 0; m < kMeasurePrefixes.size(); ++m) {
        cells.push_back(num(measure(row.families[k], m)));
      }
    }
    table.push_back(std::move(cells));
  }

  if (format == Format::kCsv) {
    csv::write_row(os, header);
    for (const auto& cells : table) csv::write_row(os, cells);
    return;
  }
  nlohmann::ordered_json doc;
  doc["columns"] = header;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& cells : table) {
    nlohmann::ordered_json obj;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (cells[c] == kNaToken) {
        obj[header[c]] = nullptr;
      } else if (c < 2) {
        obj[header[c]] = cells[c];
      } else if (c < 5) {
        obj[header[c]] = std::stoll(cells[c]);
      } else {
        bool ok = false;
        obj[header[c]] = *parse_optional_double(cells[c], ok);
      }
    }
    doc["rows"].push_back(std::move(obj));
  }
  os << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Writers for the raw inputs (used for round-trips and the fixture client).

namespace detail {

enum class Cell { kText, kInteger, kReal };

// Rows in csv, or in json as one object per row with typed values.
inline void write_rows(std::ostream& os, Format format, const std::vector<std::string>& header,
                       const std::vector<Cell>& types,
                       const std::vector<std::vector<std::string>>& rows) {
  if (format == Format::kCsv) {
    csv::write_row(os, header);
    for (const auto& r : rows) csv::write_row(os, r);
    return;
  }
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json obj;
    for (std::size_t c = 0; c < header.size(); ++c) {
      switch (types[c]) {
        case Cell::kText: obj[header[c]] = r[c]; break;
        case Cell::kInteger: obj[header[c]] = std::stoll(r[c]); break;
        case Cell::kReal: obj[header[c]] = std::stod(r[c]); break;
      }
    }
    doc.push_back(std::move(obj));
  }
  os << doc.dump(2) << '\n';
}

}  // namespace detail

inline void write_impact_table(std::ostream& os, const ImpactTable& table,
                               Format format = Format::kCsv) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [key, value] : table.entries()) {
    rows.push_back({key.journal.id(), std::to_string(key.year), key.indicator.str(),
                    format_shortest(value)});
  }
  using detail::Cell;
  detail::write_rows(os, format, kImpactHeader,
                     {Cell::kText, Cell::kInteger, Cell::kText, Cell::kReal}, rows);
}

inline void write_events(std::ostream& os, const std::vector<AuthorCorpus>& corpora,
                         Format format = Format::kCsv) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : corpora) {
    for (const auto& e : c.events) {
      rows.push_back({c.author_id, c.group.value_or(""), std::string(to_string(e.kind())),
                      e.journal().id(), std::to_string(e.year()), std::to_string(e.count())});
    }
  }
  using detail::Cell;
  detail::write_rows(os, format, kEventsHeader,
                     {Cell::kText, Cell::kText, Cell::kText, Cell::kText, Cell::kInteger,
                      Cell::kInteger},
                     rows);
}

inline void write_scalars(std::ostream& os, const ScalarMap& scalars) {
  csv::write_row(os, kScalarsHeader);
  for (const auto& [id, m] : scalars) {
    csv::write_row(os, {id, std::to_string(m.papers), std::to_string(m.cites),
                        std::to_string(m.h)});
  }
}

// ---------------------------------------------------------------------------
// Dataset assembly.

enum class ValidationMode { kWarn, kFail };

struct Dataset {
  ImpactTable impact_tables;
  std::vector<AuthorCorpus> corpora;
  ScalarMap scalars;
  YearWindow window{2009, 2013};

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct AssembledDataset {
  Dataset dataset;
  std::vector<std::string> warnings;
};

/// In-window Publication count for a corpus (NPub_Y before impact matching).
[[nodiscard]] inline std::int64_t publication_total(const AuthorCorpus& corpus,
                                                    const YearWindow& window) {
  std::int64_t total = 0;
  for (const auto& e : corpus.events) {
    if (e.kind() == EventKind::kPublication && window_contains(window, e.year())) {
      total += e.count();
    }
  }
  return total;
}

/// Cross-checks scalars against corpora: every scalar author must have a
/// corpus, and a corpus with Publication events must total scalars.papers
/// inside the window. Violations warn or throw depending on `mode`.
[[nodiscard]] inline AssembledDataset assemble_dataset(ImpactTable impacts,
                                                       std::vector<AuthorCorpus> corpora,
                                                       ScalarMap scalars, YearWindow window,
                                                       ValidationMode mode) {
  AssembledDataset out{{std::move(impacts), std::move(corpora), std::move(scalars), window}, {}};
  std::map<std::string, const AuthorCorpus*> by_id;
  for (const auto& c : out.dataset.corpora) by_id[c.author_id] = &c;

  std::vector<std::string> problems;
  for (const auto& [id, m] : out.dataset.scalars) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      problems.push_back("scalars author '" + id + "' has no event corpus");
      continue;
    }
    const auto& corpus = *it->second;
    const bool has_pubs =
        std::any_of(corpus.events.begin(), corpus.events.end(),
                    [](const Event& e) { return e.kind() == EventKind::kPublication; });
    if (!has_pubs) continue;
    const auto total = publication_total(corpus, window);
    if (total != m.papers) {
      problems.push_back("author '" + id + "': " + std::to_string(total) +
                         " publications in window but scalars report " +
                         std::to_string(m.papers));
    }
  }
  if (!problems.empty() && mode == ValidationMode::kFail) {
    throw Error(ErrorCode::kValidation, problems.front());
  }
  out.warnings = std::move(problems);
  return out;
}

// ---------------------------------------------------------------------------
// Bibliographic source client.

struct EventRecord {
  EventKind kind;
  std::string journal;
  int year;
  std::int64_t count;
};

struct AuthorRecords {
  std::optional<std::string> group;
  std::vector<EventRecord> records;
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& author_id)
      : Error(ErrorCode::kNotFound, "unknown author '" + author_id + "'") {}
};

/// Retryable failure talking to the backing store.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(ErrorCode::kTransport, what) {}
};

/// Source of raw author records. Implementations must allow concurrent
/// fetches of distinct authors.
class BibliographicClient {
 public:
  virtual ~BibliographicClient() = default;
  virtual AuthorRecords fetch(const std::string& author_id, const YearWindow& window) = 0;
};

/// Replays recorded responses from a JSON document of the form
/// {"authors": {"<id>": {"group": "...", "records": [{kind, journal, year, count}]}}}.
/// The window is not applied: recordings are the result of a window query
/// and may legitimately include references to older volumes.
class FixtureClient : public BibliographicClient {
 public:
  explicit FixtureClient(std::istream& recording) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(recording);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(0, std::string("invalid fixture JSON: ") + e.what());
    }
    for (const auto& [id, entry] : doc.at("authors").items()) {
      AuthorRecords rec;
      if (entry.contains("group") && !entry.at("group").is_null()) {
        rec.group = entry.at("group").get<std::string>();
      }
      std::size_t idx = 0;
      for (const auto& r : entry.at("records")) {
        ++idx;
        rec.records.push_back({detail::parse_kind(r.at("kind").get<std::string>(), idx),
                               r.at("journal").get<std::string>(), r.at("year").get<int>(),
                               r.at("count").get<std::int64_t>()});
      }
      store_.emplace(id, std::move(rec));
    }
  }

  /// Makes the next `n` fetches of `author_id` fail with a TransportError.
  void inject_transient_failures(const std::string& author_id, int n) {
    std::lock_guard lock(mutex_);
    pending_failures_[author_id] = n;
  }

  [[nodiscard]] int calls(const std::string& author_id) const {
    std::lock_guard lock(mutex_);
    auto it = calls_.find(author_id);
    return it == calls_.end() ? 0 : it->second;
  }

  AuthorRecords fetch(const std::string& author_id, const YearWindow&) override {
    {
      std::lock_guard lock(mutex_);
      ++calls_[author_id];
      if (auto it = pending_failures_.find(author_id);
          it != pending_failures_.end() && it->second > 0) {
        --it->second;
        throw TransportError("simulated transport failure for '" + author_id + "'");
      }
    }
    auto it = store_.find(author_id);
    if (it == store_.end()) throw NotFoundError(author_id);
    return it->second;
  }

 private:
  std::map<std::string, AuthorRecords> store_;
  mutable std::mutex mutex_;
  std::map<std::string, int> pending_failures_;
  std::map<std::string, int> calls_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  double multiplier = 2.0;
  std::function<void(std::chrono::milliseconds)> sleep =
      [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
};

/// Fetches one author's records and converts them to a corpus, retrying
/// transport failures with exponential backoff. Not-found is not retried.
[[nodiscard]] inline AuthorCorpus fetch_author_records(BibliographicClient& client,
                                                       const std::string& author_id,
                                                       const YearWindow& window,
                                                       const RetryPolicy& retry = {}) {
  auto backoff = retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      auto rec = client.fetch(author_id, window);
      AuthorCorpus corpus;
      corpus.author_id = author_id;
      corpus.group = rec.group;
      for (const auto& r : rec.records) {
        corpus.events.emplace_back(r.kind, JournalRef(r.journal), r.year, r.count);
      }
      return corpus;
    } catch (const TransportError&) {
      if (attempt >= retry.max_attempts) throw;
      if (retry.sleep) retry.sleep(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(backoff.count()) * retry.multiplier));
    }
  }
}

}  // namespace acp::ingest
