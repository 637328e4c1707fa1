// acp: command-line front end for author citation profiles.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "acp/commands.hpp"

namespace {

using acp::cli::RunConfig;
using nlohmann::json;

// Raw option values as strings; applied on top of the config file only when
// the flag was given.
struct Flags {
  std::string config;
  std::string events, impacts, scalars, profiles, out, format, window, missing, window_policy;
  std::string dataset, method, x, y, order_family;
  std::vector<std::string> families, variables, figures;
  bool fail_fast = false, validate = false, svg = false;
  unsigned threads = 1;
};

void apply_string(const std::string& key, const std::string& value, RunConfig& cfg) {
  namespace c = acp::cli;
  if (key == "events") cfg.events = value;
  else if (key == "impacts") cfg.impacts = value;
  else if (key == "scalars") cfg.scalars = value;
  else if (key == "profiles") cfg.profiles = value;
  else if (key == "out") cfg.out = value;
  else if (key == "format") cfg.format = c::parse_format(value);
  else if (key == "window") cfg.window = c::parse_window(value);
  else if (key == "missing") cfg.missing = c::parse_missing(value);
  else if (key == "window-policy") cfg.window_policy = c::parse_window_policy(value);
  else if (key == "dataset") cfg.dataset = value;
  else if (key == "method") cfg.method = c::parse_method(value);
  else if (key == "x") cfg.scatter_x = value;
  else if (key == "y") cfg.scatter_y = value;
  else if (key == "order-family") cfg.order_family = value;
  else throw acp::Error(acp::ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
}

void apply_families(const std::vector<std::string>& names, RunConfig& cfg) {
  cfg.families.clear();
  for (const auto& n : names) cfg.families.emplace_back(acp::uppercase(n));
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw acp::Error(acp::ErrorCode::kIo, "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw acp::Error(acp::ErrorCode::kParse, "config '" + path + "': " + e.what());
  }
  if (!doc.is_object()) {
    throw acp::Error(acp::ErrorCode::kParse, "config '" + path + "' must be a JSON object");
  }
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "families") apply_families(value.get<std::vector<std::string>>(), cfg);
      else if (key == "variables") cfg.variables = value.get<std::vector<std::string>>();
      else if (key == "figures") cfg.figures = value.get<std::vector<std::string>>();
      else if (key == "fail-fast") cfg.fail_fast = value.get<bool>();
      else if (key == "svg") cfg.svg = value.get<bool>();
      else if (key == "validate") cfg.validation = value.get<bool>() ? acp::ingest::ValidationMode::kFail
                                                                      : acp::ingest::ValidationMode::kWarn;
      else if (key == "threads") cfg.threads = value.get<unsigned>();
      else apply_string(key, value.get<std::string>(), cfg);
    }
  } catch (const json::exception& e) {
    throw acp::Error(acp::ErrorCode::kParse, "config '" + path + "': " + e.what());
  }
}

struct Registered {
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, CLI::Option*>> strings{};
  CLI::Option* families = nullptr;
  CLI::Option* variables = nullptr;
  CLI::Option* figures = nullptr;
  CLI::Option* fail_fast = nullptr;
  CLI::Option* validate = nullptr;
  CLI::Option* svg = nullptr;
  CLI::Option* threads = nullptr;
};

RunConfig build_config(const Registered& reg, const Flags& f) {
  RunConfig cfg;
  if (const char* env = std::getenv("ACP_OUT_DIR"); env && *env) cfg.out = env;
  if (!f.config.empty()) apply_config_file(f.config, cfg);

  const std::map<std::string, const std::string*> values = {
      {"events", &f.events},     {"impacts", &f.impacts},   {"scalars", &f.scalars},
      {"profiles", &f.profiles}, {"out", &f.out},           {"format", &f.format},
      {"window", &f.window},     {"missing", &f.missing},   {"window-policy", &f.window_policy},
      {"dataset", &f.dataset},   {"method", &f.method},     {"x", &f.x},
      {"y", &f.y},               {"order-family", &f.order_family}};
  for (const auto& [key, opt] : reg.strings) {
    if (opt->count() > 0) apply_string(key, *values.at(key), cfg);
  }
  if (reg.families && reg.families->count() > 0) apply_families(f.families, cfg);
  if (reg.variables && reg.variables->count() > 0) cfg.variables = f.variables;
  if (reg.figures && reg.figures->count() > 0) cfg.figures = f.figures;
  if (reg.fail_fast && reg.fail_fast->count() > 0) cfg.fail_fast = true;
  if (reg.svg && reg.svg->count() > 0) cfg.svg = true;
  if (reg.validate && reg.validate->count() > 0) cfg.validation = acp::ingest::ValidationMode::kFail;
  if (reg.threads && reg.threads->count() > 0) cfg.threads = f.threads;
  return cfg;
}

void add_string(Registered& reg, const std::string& key, std::string& target,
                const std::string& help) {
  reg.strings.emplace_back(key, reg.app->add_option("--" + key, target, help));
}

void add_common(Registered& reg, Flags& f) {
  reg.app->add_option("--config", f.config, "JSON config file; flags override its values");
  add_string(reg, "out", f.out, "output directory (default: $ACP_OUT_DIR or .)");
  add_string(reg, "dataset", f.dataset, "output file prefix");
  reg.strings.back().second->check(CLI::Validator(
      [](std::string& s) { return s.find_first_of("/\\") == std::string::npos ? "" : "no path separators"; },
      "NAME"));
}

void add_report_format(Registered& reg, Flags& f) {
  add_string(reg, "format", f.format, "csv|json|text");
  reg.strings.back().second->check(CLI::IsMember({"csv", "json", "text"}));
}

void add_profiles_input(Registered& reg, Flags& f) {
  add_string(reg, "profiles", f.profiles, "per-author profiles (csv or json)");
  add_string(reg, "scalars", f.scalars, "optional scalars file overriding papers/cites/h");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Author citation profile indicators"};
  app.require_subcommand(1);
  Flags f;

  Registered compute;
  compute.app = app.add_subcommand("compute", "compute per-author profiles");
  add_common(compute, f);
  add_string(compute, "events", f.events, "events file (csv or json)");
  add_string(compute, "impacts", f.impacts, "impact table (csv or json)");
  add_string(compute, "scalars", f.scalars, "optional scalars file");
  add_string(compute, "window", f.window, "year window START:END (default 2009:2013)");
  add_string(compute, "missing", f.missing, "strict|drop|nearest:K (default drop)");
  add_string(compute, "window-policy", f.window_policy, "strict|open-references");
  compute.families = compute.app->add_option("--family", f.families, "indicator family (repeatable)");
  compute.fail_fast = compute.app->add_flag("--fail-fast", f.fail_fast, "stop at the first failing author");
  compute.validate = compute.app->add_flag("--validate", f.validate, "treat scalar/event mismatches as errors");
  compute.threads = compute.app->add_option("--threads", f.threads, "worker threads (0 = all cores)");

  Registered summarize;
  summarize.app = app.add_subcommand("summarize", "group summaries and variance decomposition");
  add_common(summarize, f);
  add_profiles_input(summarize, f);
  add_report_format(summarize, f);
  summarize.variables = summarize.app->add_option("--variables", f.variables, "variables to summarize");

  Registered correlate;
  correlate.app = app.add_subcommand("correlate", "per-group correlation matrices");
  add_common(correlate, f);
  add_profiles_input(correlate, f);
  add_report_format(correlate, f);
  add_string(correlate, "method", f.method, "pearson|spearman");
  correlate.strings.back().second->check(CLI::IsMember({"pearson", "spearman"}));
  correlate.variables = correlate.app->add_option("--variables", f.variables, "variables to correlate");

  Registered report;
  report.app = app.add_subcommand("report", "figure data: box plots, scatter, ordered dimensions");
  add_common(report, f);
  add_profiles_input(report, f);
  add_report_format(report, f);
  report.figures = report.app->add_option("--figure", f.figures, "boxplot|scatter|ordered (repeatable)")
                       ->check(CLI::IsMember({"boxplot", "scatter", "ordered"}));
  report.variables = report.app->add_option("--variables", f.variables, "box plot variables");
  add_string(report, "x", f.x, "scatter x variable");
  add_string(report, "y", f.y, "scatter y variable");
  add_string(report, "order-family", f.order_family, "family for the ordered dimensions");
  report.svg = report.app->add_flag("--svg", f.svg, "also write SVG box plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(acp::ErrorCode::kInvalidArgument);
  }

  const Registered* chosen = nullptr;
  int (*command)(const RunConfig&, std::ostream&) = nullptr;
  if (compute.app->parsed()) chosen = &compute, command = acp::cli::cmd_compute;
  if (summarize.app->parsed()) chosen = &summarize, command = acp::cli::cmd_summarize;
  if (correlate.app->parsed()) chosen = &correlate, command = acp::cli::cmd_correlate;
  if (report.app->parsed()) chosen = &report, command = acp::cli::cmd_report;

  RunConfig cfg;
  try {
    cfg = build_config(*chosen, f);
  } catch (const acp::Error& e) {
    std::cerr << "acp: error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  }
  return acp::cli::run_command(command, cfg, std::cerr);
}
