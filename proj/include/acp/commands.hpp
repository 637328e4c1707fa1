#pragma once

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "acp/core.hpp"
#include "acp/engine.hpp"
#include "acp/error.hpp"
#include "acp/ingestion.hpp"
#include "acp/report.hpp"
#include "acp/stats.hpp"
#include "acp/table_row.hpp"

namespace acp::cli {

namespace fs = std::filesystem;

struct RunConfig {
  YearWindow window{2009, 2013};
  std::vector<IndicatorName> families{IndicatorName::sjr(), IndicatorName::snip()};
  MissingValuePolicy missing = DropAndRenormalize{};
  WindowPolicy window_policy = WindowPolicy::kStrictWindow;
  std::optional<fs::path> events;
  std::optional<fs::path> impacts;
  std::optional<fs::path> scalars;
  std::optional<fs::path> profiles;
  fs::path out = ".";
  report::OutputFormat format = report::OutputFormat::kCsv;
  bool fail_fast = false;
  unsigned threads = 1;
  std::string dataset;  // output file prefix; derived from inputs when empty
  ingest::ValidationMode validation = ingest::ValidationMode::kWarn;

  // correlate
  stats::CorrelationMethod method = stats::CorrelationMethod::kPearson;
  // summarize / correlate / report
  std::vector<std::string> variables;
  // report
  std::vector<std::string> figures{"boxplot", "scatter", "ordered"};
  std::string scatter_x;
  std::string scatter_y;
  std::string order_family;
  bool svg = false;
};

// ---------------------------------------------------------------------------
// Flag value parsers (shared by the CLI and config files).

[[nodiscard]] inline YearWindow parse_window(std::string_view text) {
  const auto colon = text.find(':');
  auto bad = [&] {
    return Error(ErrorCode::kInvalidArgument,
                 "invalid window '" + std::string(text) + "', expected START:END");
  };
  if (colon == std::string_view::npos) throw bad();
  int a = 0, b = 0;
  auto s1 = text.substr(0, colon), s2 = text.substr(colon + 1);
  auto r1 = std::from_chars(s1.data(), s1.data() + s1.size(), a);
  auto r2 = std::from_chars(s2.data(), s2.data() + s2.size(), b);
  if (r1.ec != std::errc{} || r1.ptr != s1.data() + s1.size() || r2.ec != std::errc{} ||
      r2.ptr != s2.data() + s2.size()) {
    throw bad();
  }
  return YearWindow(a, b);
}

[[nodiscard]] inline MissingValuePolicy parse_missing(std::string_view text) {
  if (text == "strict") return StrictMissing{};
  if (text == "drop") return DropAndRenormalize{};
  if (text.starts_with("nearest:")) {
    auto k = text.substr(8);
    int d = -1;
    auto r = std::from_chars(k.data(), k.data() + k.size(), d);
    if (r.ec == std::errc{} && r.ptr == k.data() + k.size() && d >= 0) return NearestYear{d};
  }
  throw Error(ErrorCode::kInvalidArgument,
              "invalid missing policy '" + std::string(text) + "', expected strict|drop|nearest:K");
}

[[nodiscard]] inline WindowPolicy parse_window_policy(std::string_view text) {
  if (text == "strict") return WindowPolicy::kStrictWindow;
  if (text == "open-references") return WindowPolicy::kOpenReferences;
  throw Error(ErrorCode::kInvalidArgument, "invalid window policy '" + std::string(text) +
                                               "', expected strict|open-references");
}

[[nodiscard]] inline report::OutputFormat parse_format(std::string_view text) {
  if (text == "csv") return report::OutputFormat::kCsv;
  if (text == "json") return report::OutputFormat::kJson;
  if (text == "text") return report::OutputFormat::kText;
  throw Error(ErrorCode::kInvalidArgument,
              "invalid format '" + std::string(text) + "', expected csv|json|text");
}

[[nodiscard]] inline stats::CorrelationMethod parse_method(std::string_view text) {
  if (text == "pearson") return stats::CorrelationMethod::kPearson;
  if (text == "spearman") return stats::CorrelationMethod::kSpearman;
  throw Error(ErrorCode::kInvalidArgument,
              "invalid method '" + std::string(text) + "', expected pearson|spearman");
}

// ---------------------------------------------------------------------------
// File helpers.

namespace detail {

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return in;
}

inline ingest::Format format_of(const fs::path& path) {
  return path.extension() == ".json" ? ingest::Format::kJson : ingest::Format::kCsv;
}

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

inline const fs::path& require_path(const std::optional<fs::path>& p, const char* flag) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string("missing required ") + flag);
  return *p;
}

inline std::string dataset_name(const RunConfig& cfg, const std::optional<fs::path>& input) {
  if (!cfg.dataset.empty()) return cfg.dataset;
  if (input) return input->stem().string();
  return "acp";
}

inline fs::path output_path(const RunConfig& cfg, const std::string& dataset,
                            const std::string& report) {
  return cfg.out / (dataset + "." + report + "." + std::string(report::extension(cfg.format)));
}

inline void emit(const RunConfig& cfg, const std::string& dataset, const std::string& name,
                 const report::Table& table, std::ostream& log) {
  const auto path = output_path(cfg, dataset, name);
  write_file(path, report::render_to_string(table, cfg.format));
  log << "acp: wrote " << path.string() << '\n';
}

inline std::vector<AuthorTableRow> load_profile_rows(const RunConfig& cfg) {
  const auto& path = require_path(cfg.profiles, "--profiles");
  auto in = open_input(path);
  auto rows = ingest::load_profiles(in, format_of(path));
  if (cfg.scalars) {
    auto sin = open_input(*cfg.scalars);
    const auto scalars = ingest::load_scalars(sin);
    for (auto& r : rows) {
      if (auto it = scalars.find(r.author_id); it != scalars.end()) {
        r.papers = it->second.papers;
        r.cites = it->second.cites;
        r.h = it->second.h;
      }
    }
  }
  if (rows.empty()) throw Error(ErrorCode::kNoAuthors, "profiles file has no authors");
  return rows;
}

inline std::vector<std::string> measure_variables(const std::vector<AuthorTableRow>& rows) {
  std::vector<std::string> out;
  for (const auto& f : rows.front().families) {
    for (auto prefix : kMeasurePrefixes) out.push_back(variable_name(prefix, f.family));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit code; data goes to files, logs to
// `log`.

struct ComputeResult {
  std::vector<AuthorTableRow> rows;
  std::vector<AuthorFailure> failures;
  std::vector<std::string> warnings;
};

/// In-memory core of `compute`: profiles for every family and the rows that
/// go into profiles.csv.
[[nodiscard]] inline ComputeResult compute_rows(const ingest::Dataset& data,
                                                const RunConfig& cfg) {
  const EngineOptions options{cfg.missing, cfg.window_policy};
  const BatchOptions batch{cfg.fail_fast, cfg.threads};
  ComputeResult result;

  std::vector<report::FamilyProfiles> families;
  std::set<std::string> failed;
  for (const auto& family : cfg.families) {
    auto br = compute_profiles(data.corpora, data.impact_tables, family, data.window, options,
                               batch);
    for (auto& f : br.failures) {
      failed.insert(f.author_id);
      result.failures.push_back(std::move(f));
    }
    families.emplace_back(family, std::move(br.profiles));
  }

  std::vector<report::AuthorInfo> authors;
  for (const auto& c : data.corpora) {
    if (failed.count(c.author_id)) continue;
    report::AuthorInfo info{c.author_id, c.group, std::nullopt};
    if (auto it = data.scalars.find(c.author_id); it != data.scalars.end()) {
      info.scalars = it->second;
    }
    authors.push_back(std::move(info));
  }
  result.rows = report::author_table(authors, families);
  if (data.scalars.empty()) {
    // Without supplied scalars, report in-window event totals; h stays NA.
    std::map<std::string, const AuthorCorpus*> by_id;
    for (const auto& c : data.corpora) by_id[c.author_id] = &c;
    for (auto& row : result.rows) {
      const auto& corpus = *by_id.at(row.author_id);
      std::int64_t cites = 0;
      for (const auto& e : corpus.events) {
        if (e.kind() == EventKind::kCitation && window_contains(data.window, e.year())) {
          cites += e.count();
        }
      }
      row.papers = ingest::publication_total(corpus, data.window);
      row.cites = cites;
      row.h.reset();
    }
    report::sort_author_rows(result.rows);
  }
  return result;
}

[[nodiscard]] inline ingest::Dataset load_dataset(const RunConfig& cfg,
                                                  std::vector<std::string>* warnings = nullptr) {
  const auto& events_path = detail::require_path(cfg.events, "--events");
  const auto& impacts_path = detail::require_path(cfg.impacts, "--impacts");
  auto ein = detail::open_input(events_path);
  auto corpora = ingest::load_events(ein, detail::format_of(events_path));
  auto iin = detail::open_input(impacts_path);
  auto impacts = ingest::load_impact_table(iin, detail::format_of(impacts_path));
  ingest::ScalarMap scalars;
  if (cfg.scalars) {
    auto sin = detail::open_input(*cfg.scalars);
    scalars = ingest::load_scalars(sin);
  }
  auto assembled = ingest::assemble_dataset(std::move(impacts), std::move(corpora),
                                            std::move(scalars), cfg.window, cfg.validation);
  if (warnings) *warnings = std::move(assembled.warnings);
  return std::move(assembled.dataset);
}

inline int cmd_compute(const RunConfig& cfg, std::ostream& log) {
  std::vector<std::string> warnings;
  const auto data = load_dataset(cfg, &warnings);
  for (const auto& w : warnings) log << "acp: warning: " << w << '\n';
  if (data.corpora.empty()) {
    log << "acp: error: no authors in events input\n";
    return static_cast<int>(ErrorCode::kNoAuthors);
  }
  const auto result = compute_rows(data, cfg);
  for (const auto& f : result.failures) {
    log << "acp: error: author '" << f.author_id << "': " << f.message << '\n';
  }
  std::ostringstream os;
  ingest::write_profiles(os, result.rows);
  const auto path = cfg.out / "profiles.csv";
  detail::write_file(path, os.str());
  log << "acp: wrote " << path.string() << " (" << result.rows.size() << " authors)\n";
  if (!result.failures.empty()) return static_cast<int>(result.failures.front().code);
  return 0;
}

inline int cmd_summarize(const RunConfig& cfg, std::ostream& log) {
  const auto rows = detail::load_profile_rows(cfg);
  const auto dataset = detail::dataset_name(cfg, cfg.profiles);
  std::vector<std::string> table4_vars = cfg.variables;
  std::vector<std::string> table5_vars = cfg.variables;
  if (cfg.variables.empty()) {
    for (const auto& v : kScalarVariables) {
      const auto col = report::column(rows, v);
      if (std::any_of(col.begin(), col.end(), [](const auto& x) { return x.has_value(); })) {
        table4_vars.emplace_back(v);
      } else {
        log << "acp: warning: '" << v << "' is undefined for every author; omitted\n";
      }
    }
    table5_vars = detail::measure_variables(rows);
    table4_vars.insert(table4_vars.end(), table5_vars.begin(), table5_vars.end());
  }

  detail::emit(cfg, dataset, "table4",
               report::render_group_summary(report::group_summary(rows, table4_vars)), log);

  if (report::group_names(rows).size() < 2) {
    log << "acp: warning: fewer than 2 groups; variance decomposition skipped\n";
    return 0;
  }
  const auto agg = report::aggregate_report(rows, table5_vars);
  detail::emit(cfg, dataset, "table5", report::render_aggregate(agg), log);
  detail::emit(cfg, dataset, "variance", report::render_variance(agg), log);
  if (!agg.deltas.empty()) detail::emit(cfg, dataset, "deltas", report::render_deltas(agg), log);
  return 0;
}

inline int cmd_correlate(const RunConfig& cfg, std::ostream& log) {
  const auto rows = detail::load_profile_rows(cfg);
  const auto dataset = detail::dataset_name(cfg, cfg.profiles);
  const auto variables = cfg.variables.empty()
                             ? report::correlation_variables(rows.front().families.front().family)
                             : cfg.variables;
  const auto matrices = report::correlation_report(rows, variables, cfg.method);
  const std::string name =
      cfg.method == stats::CorrelationMethod::kPearson ? "table6" : "table7";
  detail::emit(cfg, dataset, name, report::render_correlations(matrices), log);
  for (const auto& g : matrices) {
    const bool undefined = std::any_of(g.matrix.cells.begin(), g.matrix.cells.end(), [](const auto& row) {
      return std::any_of(row.begin(), row.end(), [](const auto& cell) { return !cell.r; });
    });
    if (undefined) log << "acp: warning: group '" << g.group << "' has undefined correlation cells\n";
  }
  if (rows.front().families.size() >= 2) {
    detail::emit(cfg, dataset, "family_consistency",
                 report::render_family_consistency(report::family_consistency(rows)), log);
  }
  return 0;
}

inline int cmd_report(const RunConfig& cfg, std::ostream& log) {
  const auto rows = detail::load_profile_rows(cfg);
  const auto dataset = detail::dataset_name(cfg, cfg.profiles);
  const auto& first_family = rows.front().families.front().family;
  for (const auto& fig : cfg.figures) {
    if (fig == "boxplot") {
      const auto vars = cfg.variables.empty() ? detail::measure_variables(rows) : cfg.variables;
      const auto data = report::boxplot_data(rows, vars);
      detail::emit(cfg, dataset, "boxplot", report::render_boxplot(data), log);
      if (cfg.svg) {
        for (const auto& v : vars) {
          const auto path = cfg.out / (dataset + ".boxplot." + v + ".svg");
          detail::write_file(path, report::boxplot_svg(data, v));
          log << "acp: wrote " << path.string() << '\n';
        }
      }
    } else if (fig == "scatter") {
      const auto x = cfg.scatter_x.empty() ? variable_name("p", first_family) : cfg.scatter_x;
      const auto y = cfg.scatter_y.empty() ? variable_name("i", first_family) : cfg.scatter_y;
      detail::emit(cfg, dataset, "scatter",
                   report::render_scatter(report::scatter_data(rows, x, y), x, y), log);
    } else if (fig == "ordered") {
      const IndicatorName family =
          cfg.order_family.empty() ? first_family : IndicatorName(uppercase(cfg.order_family));
      detail::emit(cfg, dataset, "ordered",
                   report::render_ordered(report::ordered_dimensions(rows, family), family), log);
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown figure '" + fig + "', expected boxplot|scatter|ordered");
    }
  }
  return 0;
}

/// Runs a command, mapping library errors to exit codes.
template <typename Command>
int run_command(Command&& command, const RunConfig& cfg, std::ostream& log) {
  try {
    return command(cfg, log);
  } catch (const MissingImpactError& e) {
    log << "acp: error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const Error& e) {
    log << "acp: error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    log << "acp: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace acp::cli
