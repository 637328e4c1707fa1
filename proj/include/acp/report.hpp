#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "acp/core.hpp"
#include "acp/csv.hpp"
#include "acp/error.hpp"
#include "acp/ingestion.hpp"
#include "acp/numeric.hpp"
#include "acp/stats.hpp"
#include "acp/table_row.hpp"

namespace acp::report {

inline constexpr int kValueDecimals = 3;
inline constexpr int kCorrelationDecimals = 2;
inline constexpr int kPercentDecimals = 1;

enum class OutputFormat { kCsv, kJson, kText };

[[nodiscard]] inline std::string_view extension(OutputFormat f) {
  switch (f) {
    case OutputFormat::kCsv: return "csv";
    case OutputFormat::kJson: return "json";
    case OutputFormat::kText: return "txt";
  }
  return "csv";
}

/// Rendered rows of strings; `numeric[c]` marks columns emitted as JSON
/// numbers.
struct Table {
  std::vector<std::string> columns;
  std::vector<bool> numeric;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;  // text-format footnotes only
};

inline void render(std::ostream& os, const Table& table, OutputFormat format) {
  switch (format) {
    case OutputFormat::kCsv:
      csv::write_row(os, table.columns);
      for (const auto& r : table.rows) csv::write_row(os, r);
      return;
    case OutputFormat::kJson: {
      auto doc = nlohmann::ordered_json::array();
      for (const auto& r : table.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
          const auto& cell = r[c];
          bool ok = false;
          auto v = parse_optional_double(cell, ok);
          if (cell == kNaToken) {
            obj[table.columns[c]] = nullptr;
          } else if (table.numeric[c] && ok && v) {
            obj[table.columns[c]] = *v;
          } else {
            obj[table.columns[c]] = cell;
          }
        }
        doc.push_back(std::move(obj));
      }
      os << doc.dump(2) << '\n';
      return;
    }
    case OutputFormat::kText: {
      std::vector<std::size_t> width(table.columns.size());
      for (std::size_t c = 0; c < table.columns.size(); ++c) width[c] = table.columns[c].size();
      for (const auto& r : table.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
      }
      auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < cells.size(); ++c) {
          const auto pad = std::string(width[c] - cells[c].size(), ' ');
          if (c) out += "  ";
          out += table.numeric[c] ? pad + cells[c] : cells[c] + pad;
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        os << out << '\n';
      };
      line(table.columns);
      std::size_t total = 0;
      for (auto w : width) total += w;
      os << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
      for (const auto& r : table.rows) line(r);
      for (const auto& n : table.notes) os << n << '\n';
      return;
    }
  }
}

[[nodiscard]] inline std::string render_to_string(const Table& table, OutputFormat format) {
  std::ostringstream os;
  render(os, table, format);
  return os.str();
}

// ---------------------------------------------------------------------------
// Per-author table.

struct AuthorInfo {
  std::string author_id;
  std::optional<std::string> group;
  std::optional<ingest::ScalarMetrics> scalars;
};

using FamilyProfiles = std::pair<IndicatorName, std::vector<IndicatorProfile>>;

/// Ordering of the published per-author table: group, then h descending,
/// then cites descending; remaining ties keep input order.
inline void sort_author_rows(std::vector<AuthorTableRow>& rows) {
  auto key_group = [](const AuthorTableRow& r) { return r.group.value_or("\x7f"); };
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    const auto ga = key_group(a), gb = key_group(b);
    if (ga != gb) return ga < gb;
    const auto ha = a.h.value_or(-1), hb = b.h.value_or(-1);
    if (ha != hb) return ha > hb;
    return a.cites.value_or(-1) > b.cites.value_or(-1);
  });
}

[[nodiscard]] inline std::vector<AuthorTableRow> author_table(
    const std::vector<AuthorInfo>& authors, const std::vector<FamilyProfiles>& families) {
  std::vector<std::map<std::string, const IndicatorProfile*>> index(families.size());
  for (std::size_t f = 0; f < families.size(); ++f) {
    for (const auto& p : families[f].second) index[f][p.author_id] = &p;
  }
  std::vector<AuthorTableRow> rows;
  rows.reserve(authors.size());
  for (const auto& a : authors) {
    AuthorTableRow row;
    row.author_id = a.author_id;
    row.group = a.group;
    if (a.scalars) {
      row.papers = a.scalars->papers;
      row.cites = a.scalars->cites;
      row.h = a.scalars->h;
    }
    for (std::size_t f = 0; f < families.size(); ++f) {
      auto it = index[f].find(a.author_id);
      if (it == index[f].end()) {
        throw Error(ErrorCode::kValidation, "author '" + a.author_id + "' has no " +
                                                families[f].first.str() + " profile");
      }
      row.families.push_back(family_columns(*it->second));
    }
    rows.push_back(std::move(row));
  }
  sort_author_rows(rows);
  return rows;
}

[[nodiscard]] inline Table render_author_table(const std::vector<AuthorTableRow>& rows) {
  Table t;
  std::vector<IndicatorName> families;
  if (!rows.empty()) {
    for (const auto& f : rows.front().families) families.push_back(f.family);
  }
  t.columns = ingest::profiles_header(families);
  t.numeric.assign(t.columns.size(), true);
  t.numeric[0] = t.numeric[1] = false;
  auto integer = [](std::optional<std::int64_t> v) {
    return v ? std::to_string(*v) : std::string(kNaToken);
  };
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.author_id, r.group.value_or(std::string(kNaToken)),
                                      integer(r.papers), integer(r.cites), integer(r.h)};
    for (const auto& f : r.families) {
      for (std::size_t m = 0; m < kMeasurePrefixes.size(); ++m) {
        cells.push_back(format_fixed(measure(f, m), kValueDecimals));
      }
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Variable access.

[[nodiscard]] inline std::vector<std::string> available_variables(
    const std::vector<AuthorTableRow>& rows) {
  if (rows.empty()) return {};
  return row_variables(rows.front());
}

inline void require_variables(const std::vector<AuthorTableRow>& rows,
                              const std::vector<std::string>& names) {
  const auto avail = available_variables(rows);
  for (const auto& n : names) {
    if (std::find(avail.begin(), avail.end(), n) == avail.end()) {
      std::string list;
      for (const auto& a : avail) list += (list.empty() ? "" : ", ") + a;
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown variable '" + n + "'; available: " + list);
    }
  }
}

[[nodiscard]] inline std::vector<std::optional<double>> column(
    const std::vector<AuthorTableRow>& rows, std::string_view name) {
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    bool known = false;
    out.push_back(row_value(r, name, known));
    if (!known) {
      throw Error(ErrorCode::kInvalidArgument, "unknown variable '" + std::string(name) + "'");
    }
  }
  return out;
}

/// Group names in sorted order; rows without a group are ignored.
[[nodiscard]] inline std::vector<std::string> group_names(const std::vector<AuthorTableRow>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (r.group && std::find(out.begin(), out.end(), *r.group) == out.end()) {
      out.push_back(*r.group);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

[[nodiscard]] inline std::vector<AuthorTableRow> rows_in_group(
    const std::vector<AuthorTableRow>& rows, const std::string& group) {
  std::vector<AuthorTableRow> out;
  for (const auto& r : rows) {
    if (r.group == group) out.push_back(r);
  }
  return out;
}

struct VariableSummary {
  std::string variable;
  stats::DescriptiveSummary summary;
  std::size_t excluded = 0;  // undefined values dropped before describe
};

namespace detail {

inline VariableSummary summarize(const std::vector<AuthorTableRow>& rows,
                                 const std::string& variable, const std::string& scope) {
  std::vector<double> values;
  std::size_t excluded = 0;
  for (const auto& v : column(rows, variable)) {
    if (v) values.push_back(*v);
    else ++excluded;
  }
  if (values.empty()) {
    throw Error(ErrorCode::kValidation,
                "no defined values of '" + variable + "' in " + scope);
  }
  return {variable, stats::describe(values), excluded};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-group descriptive summaries.

struct GroupSummaryBlock {
  std::string group;
  std::vector<VariableSummary> variables;
};

[[nodiscard]] inline std::vector<GroupSummaryBlock> group_summary(
    const std::vector<AuthorTableRow>& rows, const std::vector<std::string>& variables) {
  require_variables(rows, variables);
  for (const auto& r : rows) {
    if (!r.group) {
      throw Error(ErrorCode::kValidation, "author '" + r.author_id + "' has no group");
    }
  }
  std::vector<GroupSummaryBlock> out;
  for (const auto& g : group_names(rows)) {
    GroupSummaryBlock block{g, {}};
    const auto members = rows_in_group(rows, g);
    for (const auto& v : variables) {
      block.variables.push_back(detail::summarize(members, v, "group '" + g + "'"));
    }
    out.push_back(std::move(block));
  }
  return out;
}

namespace detail {

inline void append_summary_rows(Table& t, const std::string& scope,
                                const std::vector<VariableSummary>& vars) {
  using Getter = double (*)(const stats::DescriptiveSummary&);
  static const std::pair<const char*, Getter> measures[] = {
      {"Median", [](const stats::DescriptiveSummary& s) { return s.median; }},
      {"Mean", [](const stats::DescriptiveSummary& s) { return s.mean; }},
      {"Standard deviation", [](const stats::DescriptiveSummary& s) { return s.sample_std; }},
      {"Min", [](const stats::DescriptiveSummary& s) { return s.min; }},
      {"Max", [](const stats::DescriptiveSummary& s) { return s.max; }},
      {"Range (Max-Min)", [](const stats::DescriptiveSummary& s) { return s.range; }},
  };
  for (const auto& [label, get] : measures) {
    std::vector<std::string> cells = {scope, label};
    for (const auto& v : vars) cells.push_back(format_fixed(get(v.summary), kValueDecimals));
    t.rows.push_back(std::move(cells));
  }
  std::vector<std::string> n_cells = {scope, "n"};
  for (const auto& v : vars) n_cells.push_back(std::to_string(v.summary.n));
  t.rows.push_back(std::move(n_cells));
  for (const auto& v : vars) {
    if (v.excluded) {
      t.notes.push_back(scope + ": " + std::to_string(v.excluded) + " undefined value(s) of " +
                        variable_label(v.variable) + " excluded");
    }
  }
}

}  // namespace detail

[[nodiscard]] inline Table render_group_summary(const std::vector<GroupSummaryBlock>& blocks) {
  Table t;
  t.columns = {"group", "measure"};
  if (!blocks.empty()) {
    for (const auto& v : blocks.front().variables) t.columns.push_back(v.variable);
  }
  t.numeric.assign(t.columns.size(), true);
  t.numeric[0] = t.numeric[1] = false;
  for (const auto& b : blocks) detail::append_summary_rows(t, b.group, b.variables);
  return t;
}

// ---------------------------------------------------------------------------
// Pooled data: summaries, variance decomposition, cross-family deltas.

struct Decomposition {
  std::string variable;
  stats::VarianceDecomposition ss;
};

/// Relative difference of a measure between two indicator families,
/// (a - b) / b, on the pooled median and mean.
struct FamilyDelta {
  std::string measure;  // prefix, e.g. "pi"
  IndicatorName family_a;
  IndicatorName family_b;
  double median_a = 0, median_b = 0, mean_a = 0, mean_b = 0;
  double median_delta = 0;
  double mean_delta = 0;
};

struct AggregateReport {
  std::vector<VariableSummary> pooled;
  std::vector<Decomposition> decompositions;
  std::vector<FamilyDelta> deltas;
};

[[nodiscard]] inline stats::GroupedSample grouped_sample(const std::vector<AuthorTableRow>& rows,
                                                         const std::string& variable) {
  stats::GroupedSample sample;
  for (const auto& g : group_names(rows)) {
    std::vector<double> values;
    for (const auto& v : column(rows_in_group(rows, g), variable)) {
      if (v) values.push_back(*v);
    }
    if (values.empty()) {
      throw Error(ErrorCode::kValidation,
                  "group '" + g + "' has no defined values of '" + variable + "'");
    }
    sample.add(g, std::move(values));
  }
  return sample;
}

[[nodiscard]] inline AggregateReport aggregate_report(const std::vector<AuthorTableRow>& rows,
                                                      const std::vector<std::string>& variables) {
  require_variables(rows, variables);
  const auto groups = group_names(rows);
  if (groups.size() < 2) {
    throw Error(ErrorCode::kInsufficientGroups,
                "aggregate report needs at least 2 groups, got " + std::to_string(groups.size()));
  }
  AggregateReport out;
  for (const auto& v : variables) {
    out.pooled.push_back(detail::summarize(rows, v, "pooled data"));
    out.decompositions.push_back({v, stats::variance_decomposition(grouped_sample(rows, v))});
  }

  if (!rows.empty()) {
    const auto& fams = rows.front().families;
    for (std::size_t a = 0; a < fams.size(); ++a) {
      for (std::size_t b = a + 1; b < fams.size(); ++b) {
        for (auto prefix : kMeasurePrefixes) {
          const auto va = variable_name(prefix, fams[a].family);
          const auto vb = variable_name(prefix, fams[b].family);
          const auto sa = detail::summarize(rows, va, "pooled data").summary;
          const auto sb = detail::summarize(rows, vb, "pooled data").summary;
          FamilyDelta d{std::string(prefix), fams[a].family, fams[b].family,
                        sa.median, sb.median, sa.mean, sb.mean,
                        (sa.median - sb.median) / sb.median, (sa.mean - sb.mean) / sb.mean};
          out.deltas.push_back(d);
        }
      }
    }
  }
  return out;
}

[[nodiscard]] inline Table render_aggregate(const AggregateReport& report) {
  Table t;
  t.columns = {"scope", "measure"};
  for (const auto& v : report.pooled) t.columns.push_back(v.variable);
  t.numeric.assign(t.columns.size(), true);
  t.numeric[0] = t.numeric[1] = false;
  detail::append_summary_rows(t, "pooled", report.pooled);
  std::vector<std::string> w = {"pooled", "Within-group variance"};
  std::vector<std::string> b = {"pooled", "Between-group variance"};
  std::vector<std::string> tot = {"pooled", "Total variance"};
  std::vector<std::string> pct = {"pooled", "Percentage reduction of the variance"};
  for (const auto& d : report.decompositions) {
    w.push_back(format_fixed(d.ss.within_ss, kValueDecimals));
    b.push_back(format_fixed(d.ss.between_ss, kValueDecimals));
    tot.push_back(format_fixed(d.ss.total_ss, kValueDecimals));
    pct.push_back(d.ss.pct_reduction ? format_fixed(*d.ss.pct_reduction * 100.0, kPercentDecimals)
                                     : std::string(kNaToken));
  }
  for (auto* r : {&w, &b, &tot, &pct}) t.rows.push_back(std::move(*r));
  return t;
}

[[nodiscard]] inline Table render_variance(const AggregateReport& report) {
  Table t;
  t.columns = {"variable", "within_ss", "between_ss", "total_ss", "pct_reduction"};
  t.numeric = {false, true, true, true, true};
  for (const auto& d : report.decompositions) {
    t.rows.push_back({d.variable, format_fixed(d.ss.within_ss, kValueDecimals),
                      format_fixed(d.ss.between_ss, kValueDecimals),
                      format_fixed(d.ss.total_ss, kValueDecimals),
                      d.ss.pct_reduction
                          ? format_fixed(*d.ss.pct_reduction * 100.0, kPercentDecimals)
                          : std::string(kNaToken)});
  }
  return t;
}

[[nodiscard]] inline Table render_deltas(const AggregateReport& report) {
  Table t;
  t.columns = {"measure",      "family_a", "family_b",         "median_a",
               "median_b",     "mean_a",   "mean_b",           "median_delta_pct",
               "mean_delta_pct"};
  t.numeric = {false, false, false, true, true, true, true, true, true};
  for (const auto& d : report.deltas) {
    const auto idx = static_cast<std::size_t>(
        std::find(kMeasurePrefixes.begin(), kMeasurePrefixes.end(), d.measure) -
        kMeasurePrefixes.begin());
    t.rows.push_back({std::string(kMeasureLabels[idx]), d.family_a.str(), d.family_b.str(),
                      format_fixed(d.median_a, kValueDecimals),
                      format_fixed(d.median_b, kValueDecimals),
                      format_fixed(d.mean_a, kValueDecimals),
                      format_fixed(d.mean_b, kValueDecimals),
                      format_fixed(d.median_delta * 100.0, kPercentDecimals),
                      format_fixed(d.mean_delta * 100.0, kPercentDecimals)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Correlations.

[[nodiscard]] inline std::string_view significance_mark(stats::Significance s) {
  switch (s) {
    case stats::Significance::k90: return "a";
    case stats::Significance::k95: return "b";
    case stats::Significance::k99: return "c";
    case stats::Significance::kNone: break;
  }
  return "";
}

/// Default correlation variables for one family: #Papers, #Cites, h, P, I, R, P/I.
[[nodiscard]] inline std::vector<std::string> correlation_variables(const IndicatorName& family) {
  return {"papers", "cites", "h", variable_name("p", family), variable_name("i", family),
          variable_name("r", family), variable_name("pi", family)};
}

struct GroupCorrelation {
  std::string group;
  stats::CorrelationMatrix matrix;
};

[[nodiscard]] inline std::vector<GroupCorrelation> correlation_report(
    const std::vector<AuthorTableRow>& rows, const std::vector<std::string>& variables,
    stats::CorrelationMethod method) {
  require_variables(rows, variables);
  std::vector<GroupCorrelation> out;
  for (const auto& g : group_names(rows)) {
    const auto members = rows_in_group(rows, g);
    std::vector<stats::Column> cols;
    for (const auto& v : variables) cols.emplace_back(v, column(members, v));
    out.push_back({g, stats::correlation_matrix(cols, method)});
  }
  return out;
}

[[nodiscard]] inline std::string render_cell(const stats::CorrelationCell& cell) {
  if (!cell.r) return std::string(kNaToken);
  auto text = format_fixed(*cell.r, kCorrelationDecimals);
  const auto mark = significance_mark(cell.significance);
  if (!mark.empty()) text += "^" + std::string(mark);
  return text;
}

/// Upper-triangular layout: one line per (group, row variable), one column
/// per later variable.
[[nodiscard]] inline Table render_correlations(const std::vector<GroupCorrelation>& report) {
  Table t;
  t.columns = {"group", "variable"};
  if (!report.empty()) {
    const auto& names = report.front().matrix.names;
    for (std::size_t c = 1; c < names.size(); ++c) t.columns.push_back(names[c]);
  }
  t.numeric.assign(t.columns.size(), false);
  bool any_undefined = false;
  for (const auto& g : report) {
    const auto& m = g.matrix;
    for (std::size_t a = 0; a + 1 < m.names.size(); ++a) {
      std::vector<std::string> cells = {g.group, m.names[a]};
      for (std::size_t b = 1; b < m.names.size(); ++b) {
        if (b <= a) {
          cells.emplace_back("");
          continue;
        }
        const auto& cell = m.at(a, b);
        any_undefined = any_undefined || !cell.r;
        cells.push_back(render_cell(cell));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  t.notes.push_back("^a significant at the 90% level; ^b at the 95% level; ^c at the 99% level");
  if (any_undefined) t.notes.push_back("NA: fewer than 3 complete pairs or constant input");
  return t;
}

struct FamilyConsistency {
  std::string group;
  std::string measure;
  stats::CorrelationCell cell;
};

/// Pearson correlation of each measure between the first two families,
/// per group.
[[nodiscard]] inline std::vector<FamilyConsistency> family_consistency(
    const std::vector<AuthorTableRow>& rows) {
  std::vector<FamilyConsistency> out;
  if (rows.empty() || rows.front().families.size() < 2) return out;
  const auto& fa = rows.front().families[0].family;
  const auto& fb = rows.front().families[1].family;
  for (const auto& g : group_names(rows)) {
    const auto members = rows_in_group(rows, g);
    for (auto prefix : kMeasurePrefixes) {
      const auto x = column(members, variable_name(prefix, fa));
      const auto y = column(members, variable_name(prefix, fb));
      out.push_back({g, std::string(prefix),
                     stats::correlate_pairwise(x, y, stats::CorrelationMethod::kPearson)});
    }
  }
  return out;
}

[[nodiscard]] inline Table render_family_consistency(const std::vector<FamilyConsistency>& rows) {
  Table t;
  t.columns = {"group", "measure", "r", "n", "significance"};
  t.numeric = {false, false, true, true, false};
  for (const auto& r : rows) {
    const auto idx = static_cast<std::size_t>(
        std::find(kMeasurePrefixes.begin(), kMeasurePrefixes.end(), r.measure) -
        kMeasurePrefixes.begin());
    t.rows.push_back({r.group, std::string(kMeasureLabels[idx]),
                      r.cell.r ? format_fixed(*r.cell.r, kCorrelationDecimals)
                               : std::string(kNaToken),
                      std::to_string(r.cell.n), std::string(significance_mark(r.cell.significance))});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Figure data.

struct BoxplotRow {
  std::string group;
  std::string variable;
  std::size_t n = 0;
  stats::BoxplotSummary box;
};

[[nodiscard]] inline std::vector<BoxplotRow> boxplot_data(const std::vector<AuthorTableRow>& rows,
                                                          const std::vector<std::string>& variables) {
  require_variables(rows, variables);
  std::vector<BoxplotRow> out;
  for (const auto& v : variables) {
    for (const auto& g : group_names(rows)) {
      std::vector<double> values;
      for (const auto& x : column(rows_in_group(rows, g), v)) {
        if (x) values.push_back(*x);
      }
      if (values.empty()) continue;
      out.push_back({g, v, values.size(), stats::boxplot(values)});
    }
  }
  return out;
}

[[nodiscard]] inline Table render_boxplot(const std::vector<BoxplotRow>& rows) {
  Table t;
  t.columns = {"group", "variable", "n", "whisker_low", "q1", "q2", "q3", "whisker_high"};
  t.numeric = {false, false, true, true, true, true, true, true};
  for (const auto& r : rows) {
    t.rows.push_back({r.group, r.variable, std::to_string(r.n),
                      format_fixed(r.box.whisker_low, kValueDecimals),
                      format_fixed(r.box.q1, kValueDecimals), format_fixed(r.box.q2, kValueDecimals),
                      format_fixed(r.box.q3, kValueDecimals),
                      format_fixed(r.box.whisker_high, kValueDecimals)});
  }
  return t;
}

struct ScatterPoint {
  std::string author_id;
  std::string group;
  double x = 0;
  double y = 0;
};

/// Paired values; authors with either side undefined are skipped.
[[nodiscard]] inline std::vector<ScatterPoint> scatter_data(const std::vector<AuthorTableRow>& rows,
                                                            const std::string& x_var,
                                                            const std::string& y_var) {
  require_variables(rows, {x_var, y_var});
  std::vector<ScatterPoint> out;
  for (const auto& r : rows) {
    bool known = false;
    auto x = row_value(r, x_var, known);
    auto y = row_value(r, y_var, known);
    if (x && y) out.push_back({r.author_id, r.group.value_or(std::string(kNaToken)), *x, *y});
  }
  return out;
}

[[nodiscard]] inline Table render_scatter(const std::vector<ScatterPoint>& points,
                                          const std::string& x_var, const std::string& y_var) {
  Table t;
  t.columns = {"author_id", "group", x_var, y_var};
  t.numeric = {false, false, true, true};
  for (const auto& p : points) {
    t.rows.push_back({p.author_id, p.group, format_fixed(p.x, kValueDecimals),
                      format_fixed(p.y, kValueDecimals)});
  }
  return t;
}

struct OrderedRow {
  std::string author_id;
  std::string group;
  std::optional<double> p, i, r;
};

/// Authors sorted by the I dimension of `family`, largest first; undefined
/// I goes last; ties keep input order.
[[nodiscard]] inline std::vector<OrderedRow> ordered_dimensions(
    const std::vector<AuthorTableRow>& rows, const IndicatorName& family) {
  std::vector<OrderedRow> out;
  for (const auto& row : rows) {
    auto it = std::find_if(row.families.begin(), row.families.end(),
                           [&](const FamilyColumns& f) { return f.family == family; });
    if (it == row.families.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "author '" + row.author_id + "' has no " + family.str() + " columns");
    }
    out.push_back({row.author_id, row.group.value_or(std::string(kNaToken)), it->p, it->i, it->r});
  }
  std::stable_sort(out.begin(), out.end(), [](const OrderedRow& a, const OrderedRow& b) {
    if (a.i.has_value() != b.i.has_value()) return a.i.has_value();
    return a.i && *a.i > *b.i;
  });
  return out;
}

[[nodiscard]] inline Table render_ordered(const std::vector<OrderedRow>& rows,
                                          const IndicatorName& family) {
  Table t;
  t.columns = {"rank", "author_id", "group", variable_name("p", family),
               variable_name("i", family), variable_name("r", family)};
  t.numeric = {true, false, false, true, true, true};
  std::size_t rank = 0;
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(++rank), r.author_id, r.group,
                      format_fixed(r.p, kValueDecimals), format_fixed(r.i, kValueDecimals),
                      format_fixed(r.r, kValueDecimals)});
  }
  return t;
}

[[nodiscard]] inline std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

/// Minimal horizontal box plots for one variable, one box per group.
[[nodiscard]] inline std::string boxplot_svg(const std::vector<BoxplotRow>& rows,
                                             const std::string& variable) {
  std::vector<const BoxplotRow*> sel;
  for (const auto& r : rows) {
    if (r.variable == variable) sel.push_back(&r);
  }
  if (sel.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no box plot rows for '" + variable + "'");
  }
  double lo = sel.front()->box.whisker_low, hi = sel.front()->box.whisker_high;
  for (const auto* r : sel) {
    lo = std::min(lo, r->box.whisker_low);
    hi = std::max(hi, r->box.whisker_high);
  }
  if (hi <= lo) hi = lo + 1.0;
  const double left = 140, width = 400, row_h = 40, top = 30;
  auto sx = [&](double v) { return format_fixed(left + (v - lo) / (hi - lo) * width, 2); };
  const double height = top + row_h * static_cast<double>(sel.size()) + 30;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_fixed(left + width + 20, 0)
     << "\" height=\"" << format_fixed(height, 0) << "\">\n";
  os << "  <text x=\"10\" y=\"20\" font-size=\"14\">" << xml_escape(variable_label(variable)) << "</text>\n";
  for (std::size_t k = 0; k < sel.size(); ++k) {
    const auto& b = sel[k]->box;
    const double cy = top + row_h * static_cast<double>(k) + row_h / 2;
    const auto y = format_fixed(cy, 2);
    const auto y0 = format_fixed(cy - 12, 2);
    os << "  <g>\n";
    os << "    <text x=\"10\" y=\"" << format_fixed(cy + 4, 2) << "\" font-size=\"12\">"
       << xml_escape(sel[k]->group) << "</text>\n";
    os << "    <line x1=\"" << sx(b.whisker_low) << "\" y1=\"" << y << "\" x2=\"" << sx(b.q1)
       << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    os << "    <line x1=\"" << sx(b.q3) << "\" y1=\"" << y << "\" x2=\"" << sx(b.whisker_high)
       << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    os << "    <rect x=\"" << sx(b.q1) << "\" y=\"" << y0 << "\" width=\""
       << format_fixed((b.q3 - b.q1) / (hi - lo) * width, 2)
       << "\" height=\"24\" fill=\"none\" stroke=\"black\"/>\n";
    os << "    <line x1=\"" << sx(b.q2) << "\" y1=\"" << y0 << "\" x2=\"" << sx(b.q2)
       << "\" y2=\"" << format_fixed(cy + 12, 2) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    os << "  </g>\n";
  }
  os << "  <text x=\"" << format_fixed(left, 0) << "\" y=\"" << format_fixed(height - 8, 0)
     << "\" font-size=\"11\">" << format_fixed(lo, kValueDecimals) << "</text>\n";
  os << "  <text x=\"" << format_fixed(left + width - 30, 0) << "\" y=\""
     << format_fixed(height - 8, 0) << "\" font-size=\"11\">" << format_fixed(hi, kValueDecimals)
     << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace acp::report
