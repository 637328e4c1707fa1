#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "acp/core.hpp"
#include "acp/error.hpp"
#include "acp/numeric.hpp"

namespace acp {

/// Error on any journal-year absent from the impact table.
struct StrictMissing {};
/// Skip unmatched events; weights are renormalised over matched counts.
struct DropAndRenormalize {};
/// Borrow the value of the nearest year (same journal) within max_distance,
/// preferring the earlier year on ties; otherwise drop.
struct NearestYear {
  int max_distance = 0;
};

using MissingValuePolicy = std::variant<StrictMissing, DropAndRenormalize, NearestYear>;

enum class WindowPolicy {
  kStrictWindow,     // every kind restricted to y in Y
  kOpenReferences,   // citation and reference events outside Y still count
};

struct EngineOptions {
  MissingValuePolicy missing = DropAndRenormalize{};
  WindowPolicy window_policy = WindowPolicy::kStrictWindow;
};

/// One merged (journal, year) contribution to a weighted mean.
struct WeightedTerm {
  JournalRef journal;
  int year;
  std::int64_t count;
  double impact;
  double weight;
  int impact_year;  // differs from year when NearestYear substituted a value
};

struct WeightedImpact {
  std::optional<double> value;
  CoverageDiagnostics diag;
  std::vector<WeightedTerm> terms;
};

namespace detail {

inline std::optional<std::pair<double, int>> lookup_impact(const ImpactTable& table,
                                                           const JournalRef& journal, int year,
                                                           const IndicatorName& indicator,
                                                           const MissingValuePolicy& missing) {
  if (auto v = table.find(journal, year, indicator)) return std::pair{*v, year};
  if (std::holds_alternative<StrictMissing>(missing)) {
    throw MissingImpactError(journal.id(), year, indicator.str());
  }
  if (const auto* nearest = std::get_if<NearestYear>(&missing)) {
    for (int d = 1; d <= nearest->max_distance; ++d) {
      if (auto v = table.find(journal, year - d, indicator)) return std::pair{*v, year - d};
      if (auto v = table.find(journal, year + d, indicator)) return std::pair{*v, year + d};
    }
  }
  return std::nullopt;
}

inline bool in_scope(EventKind kind, int year, const YearWindow& window, WindowPolicy policy) {
  if (window_contains(window, year)) return true;
  return policy == WindowPolicy::kOpenReferences && kind != EventKind::kPublication;
}

}  // namespace detail

/// Weighted mean of journal impacts over events of a single kind, each
/// journal-year weighted by its share of the matched count. Events are
/// merged per (journal, year) and visited in (journal id, year) order.
[[nodiscard]] inline WeightedImpact weighted_mean_impact(std::span<const Event> events,
                                                         const ImpactTable& table,
                                                         const IndicatorName& indicator,
                                                         const YearWindow& window,
                                                         const EngineOptions& options = {}) {
  WeightedImpact out;
  if (events.empty()) return out;

  const EventKind kind = events.front().kind();
  std::map<std::pair<JournalRef, int>, std::int64_t> merged;
  for (const auto& e : events) {
    if (e.kind() != kind) {
      throw Error(ErrorCode::kInvalidArgument,
                  "weighted_mean_impact expects events of a single kind");
    }
    if (!detail::in_scope(kind, e.year(), window, options.window_policy)) continue;
    merged[{e.journal(), e.year()}] += e.count();
  }

  struct Matched {
    const JournalRef* journal;
    int year;
    std::int64_t count;
    double impact;
    int impact_year;
  };
  std::vector<Matched> matched;
  matched.reserve(merged.size());
  for (const auto& [key, count] : merged) {
    out.diag.total_count += count;
    auto hit = detail::lookup_impact(table, key.first, key.second, indicator, options.missing);
    if (!hit) {
      out.diag.dropped_count += count;
      continue;
    }
    out.diag.matched_count += count;
    matched.push_back({&key.first, key.second, count, hit->first, hit->second});
  }
  if (out.diag.matched_count == 0) return out;

  const double total = static_cast<double>(out.diag.matched_count);
  KahanSum sum;
  out.terms.reserve(matched.size());
  for (const auto& m : matched) {
    const double weight = static_cast<double>(m.count) / total;
    sum.add(weight * m.impact);
    out.terms.push_back({*m.journal, m.year, m.count, m.impact, weight, m.impact_year});
  }
  out.value = sum.value();
  return out;
}

/// P, I and R for one indicator family plus the four proportions.
[[nodiscard]] inline IndicatorProfile compute_profile(const AuthorCorpus& corpus,
                                                      const ImpactTable& table,
                                                      const IndicatorName& indicator,
                                                      const YearWindow& window,
                                                      const EngineOptions& options = {}) {
  std::vector<Event> by_kind[3];
  for (const auto& e : corpus.events) by_kind[static_cast<int>(e.kind())].push_back(e);

  IndicatorProfile profile;
  profile.author_id = corpus.author_id;
  profile.indicator = indicator;
  profile.window = window;

  auto p = weighted_mean_impact(by_kind[0], table, indicator, window, options);
  auto i = weighted_mean_impact(by_kind[1], table, indicator, window, options);
  auto r = weighted_mean_impact(by_kind[2], table, indicator, window, options);
  profile.p = p.value;
  profile.i = i.value;
  profile.r = r.value;
  profile.publication_coverage = p.diag;
  profile.citation_coverage = i.diag;
  profile.reference_coverage = r.diag;
  profile.ratios = make_ratios(profile.p, profile.i, profile.r);
  return profile;
}

struct AuthorFailure {
  std::string author_id;
  ErrorCode code;
  std::string message;
};

struct BatchResult {
  std::vector<IndicatorProfile> profiles;  // sorted by author_id
  std::vector<AuthorFailure> failures;     // sorted by author_id
};

struct BatchOptions {
  bool fail_fast = false;
  unsigned threads = 1;  // 0 = hardware concurrency
};

/// Runs compute_profile over every corpus. Output order is by author_id
/// regardless of thread count. With fail_fast the first failing author (in
/// author_id order) is rethrown; otherwise failures are collected.
[[nodiscard]] inline BatchResult compute_profiles(std::span<const AuthorCorpus> corpora,
                                                  const ImpactTable& table,
                                                  const IndicatorName& indicator,
                                                  const YearWindow& window,
                                                  const EngineOptions& options = {},
                                                  const BatchOptions& batch = {}) {
  std::vector<const AuthorCorpus*> order;
  order.reserve(corpora.size());
  for (const auto& c : corpora) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->author_id < b->author_id; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (order[k]->author_id == order[k - 1]->author_id) {
      throw Error(ErrorCode::kValidation, "duplicate author_id " + order[k]->author_id);
    }
  }

  const std::size_t n = order.size();
  std::vector<std::optional<IndicatorProfile>> results(n);
  std::vector<std::exception_ptr> errors(n);
  auto run_range = [&](std::size_t begin, std::size_t step) {
    for (std::size_t k = begin; k < n; k += step) {
      try {
        results[k] = compute_profile(*order[k], table, indicator, window, options);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };

  unsigned threads = batch.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                        : batch.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    run_range(0, 1);
  } else {
    std::vector<std::future<void>> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.push_back(std::async(std::launch::async, run_range, t, threads));
    }
    for (auto& w : workers) w.get();
  }

  BatchResult out;
  for (std::size_t k = 0; k < n; ++k) {
    if (!errors[k]) {
      out.profiles.push_back(std::move(*results[k]));
      continue;
    }
    if (batch.fail_fast) std::rethrow_exception(errors[k]);
    try {
      std::rethrow_exception(errors[k]);
    } catch (const Error& e) {
      out.failures.push_back({order[k]->author_id, e.code(), e.what()});
    } catch (const std::exception& e) {
      out.failures.push_back({order[k]->author_id, ErrorCode::kInvalidArgument, e.what()});
    }
  }
  return out;
}

}  // namespace acp
