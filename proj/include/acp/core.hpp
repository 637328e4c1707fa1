#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "acp/error.hpp"

namespace acp {

/// Inclusive range of calendar years over which an author is evaluated.
class YearWindow {
 public:
  YearWindow(int start_year, int end_year) : start_(start_year), end_(end_year) {
    if (start_year > end_year) {
      throw Error(ErrorCode::kInvalidArgument,
                  "year window start " + std::to_string(start_year) +
                      " is after end " + std::to_string(end_year));
    }
  }

  [[nodiscard]] int start_year() const noexcept { return start_; }
  [[nodiscard]] int end_year() const noexcept { return end_; }
  [[nodiscard]] int length() const noexcept { return end_ - start_ + 1; }

  friend bool operator==(const YearWindow&, const YearWindow&) = default;

 private:
  int start_;
  int end_;
};

[[nodiscard]] inline bool window_contains(const YearWindow& window, int year) noexcept {
  return window.start_year() <= year && year <= window.end_year();
}

/// Canonical journal identifier. Matching is exact; no aliasing.
class JournalRef {
 public:
  explicit JournalRef(std::string id) : id_(std::move(id)) {
    if (id_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "journal id must be non-empty");
    }
  }

  [[nodiscard]] const std::string& id() const noexcept { return id_; }

  friend auto operator<=>(const JournalRef&, const JournalRef&) = default;
  friend bool operator==(const JournalRef&, const JournalRef&) = default;

 private:
  std::string id_;
};

/// Name of a journal impact indicator family (SJR, SNIP or user defined).
/// Case-sensitive.
class IndicatorName {
 public:
  explicit IndicatorName(std::string name) : name_(std::move(name)) {
    if (name_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "indicator name must be non-empty");
    }
  }

  static IndicatorName sjr() { return IndicatorName("SJR"); }
  static IndicatorName snip() { return IndicatorName("SNIP"); }

  [[nodiscard]] const std::string& str() const noexcept { return name_; }

  friend auto operator<=>(const IndicatorName&, const IndicatorName&) = default;
  friend bool operator==(const IndicatorName&, const IndicatorName&) = default;

 private:
  std::string name_;
};

struct ImpactKey {
  JournalRef journal;
  int year;
  IndicatorName indicator;

  friend auto operator<=>(const ImpactKey&, const ImpactKey&) = default;
  friend bool operator==(const ImpactKey&, const ImpactKey&) = default;
};

/// Lookup of journal impact values keyed by (journal, year, indicator).
class ImpactTable {
 public:
  using Map = std::map<ImpactKey, double>;

  ImpactTable() = default;

  /// Throws on a negative value or a duplicate key.
  void add(const JournalRef& journal, int year, const IndicatorName& indicator,
           double value) {
    if (!(value >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "impact value for (" + journal.id() + ", " + std::to_string(year) +
                      ", " + indicator.str() + ") must be non-negative");
    }
    auto [it, inserted] = entries_.emplace(ImpactKey{journal, year, indicator}, value);
    if (!inserted) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate impact entry (" + journal.id() + ", " + std::to_string(year) +
                      ", " + indicator.str() + ")");
    }
  }

  [[nodiscard]] std::optional<double> find(const JournalRef& journal, int year,
                                           const IndicatorName& indicator) const {
    auto it = entries_.find(ImpactKey{journal, year, indicator});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] const Map& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

  friend bool operator==(const ImpactTable&, const ImpactTable&) = default;

 private:
  Map entries_;
};

enum class EventKind { kPublication, kCitation, kReference };

inline constexpr EventKind kAllEventKinds[] = {EventKind::kPublication, EventKind::kCitation,
                                               EventKind::kReference};

[[nodiscard]] inline std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::kPublication: return "publication";
    case EventKind::kCitation: return "citation";
    case EventKind::kReference: return "reference";
  }
  return "?";
}

/// One (kind, journal, year) observation with a positive count: NPub, NCit
/// or NRef for that journal-year depending on kind.
class Event {
 public:
  Event(EventKind kind, JournalRef journal, int year, std::int64_t count)
      : kind_(kind), journal_(std::move(journal)), year_(year), count_(count) {
    if (count < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "event count must be >= 1, got " + std::to_string(count));
    }
  }

  [[nodiscard]] EventKind kind() const noexcept { return kind_; }
  [[nodiscard]] const JournalRef& journal() const noexcept { return journal_; }
  [[nodiscard]] int year() const noexcept { return year_; }
  [[nodiscard]] std::int64_t count() const noexcept { return count_; }

  friend bool operator==(const Event&, const Event&) = default;

 private:
  EventKind kind_;
  JournalRef journal_;
  int year_;
  std::int64_t count_;
};

struct AuthorCorpus {
  std::string author_id;
  std::optional<std::string> group;
  std::vector<Event> events;

  friend bool operator==(const AuthorCorpus&, const AuthorCorpus&) = default;
};

using EventTotals = std::map<std::tuple<EventKind, JournalRef, int>, std::int64_t>;

/// Sums counts per (kind, journal, year). Independent of event order.
[[nodiscard]] inline EventTotals aggregate_events(std::span<const Event> events) {
  EventTotals totals;
  for (const auto& e : events) {
    totals[{e.kind(), e.journal(), e.year()}] += e.count();
  }
  return totals;
}

struct CoverageDiagnostics {
  std::int64_t total_count = 0;
  std::int64_t matched_count = 0;
  std::int64_t dropped_count = 0;

  friend bool operator==(const CoverageDiagnostics&, const CoverageDiagnostics&) = default;
};

struct Ratios {
  std::optional<double> p_over_i;
  std::optional<double> p_over_r;
  std::optional<double> i_over_r;
  std::optional<double> pi_over_2r;

  friend bool operator==(const Ratios&, const Ratios&) = default;
};

/// The four proportions. A ratio is undefined when any operand is undefined
/// or its denominator dimension is zero.
[[nodiscard]] inline Ratios make_ratios(std::optional<double> p, std::optional<double> i,
                                        std::optional<double> r) {
  Ratios out;
  if (p && i && *i > 0.0) out.p_over_i = *p / *i;
  if (r && *r > 0.0) {
    if (p) out.p_over_r = *p / *r;
    if (i) out.i_over_r = *i / *r;
    if (p && i) out.pi_over_2r = (*p + *i) / (2.0 * *r);
  }
  return out;
}

struct IndicatorProfile {
  std::string author_id;
  IndicatorName indicator = IndicatorName::sjr();
  YearWindow window{2009, 2013};
  std::optional<double> p;
  std::optional<double> i;
  std::optional<double> r;
  Ratios ratios;
  CoverageDiagnostics publication_coverage;
  CoverageDiagnostics citation_coverage;
  CoverageDiagnostics reference_coverage;

  [[nodiscard]] const CoverageDiagnostics& coverage(EventKind kind) const noexcept {
    switch (kind) {
      case EventKind::kPublication: return publication_coverage;
      case EventKind::kCitation: return citation_coverage;
      case EventKind::kReference: return reference_coverage;
    }
    return publication_coverage;
  }

  friend bool operator==(const IndicatorProfile&, const IndicatorProfile&) = default;
};

}  // namespace acp
