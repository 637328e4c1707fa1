#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acp/core.hpp"

namespace acp {

/// Dimension and ratio columns for one indicator family.
struct FamilyColumns {
  IndicatorName family = IndicatorName::sjr();
  std::optional<double> p;
  std::optional<double> i;
  std::optional<double> r;
  std::optional<double> p_over_i;
  std::optional<double> p_over_r;
  std::optional<double> i_over_r;
  std::optional<double> pi_over_2r;

  friend bool operator==(const FamilyColumns&, const FamilyColumns&) = default;
};

/// One author line of the per-author table (and of profiles.csv).
struct AuthorTableRow {
  std::string author_id;
  std::optional<std::string> group;
  std::optional<std::int64_t> papers;
  std::optional<std::int64_t> cites;
  std::optional<std::int64_t> h;
  std::vector<FamilyColumns> families;

  friend bool operator==(const AuthorTableRow&, const AuthorTableRow&) = default;
};

/// Measure prefixes used in variable names: "<prefix>_<family lowercase>".
inline constexpr std::array<std::string_view, 7> kMeasurePrefixes = {"p",  "i",  "r",   "pi",
                                                                     "pr", "ir", "pi2r"};
inline constexpr std::array<std::string_view, 7> kMeasureLabels = {
    "P", "I", "R", "P/I", "P/R", "I/R", "(P+I)/2R"};
inline constexpr std::array<std::string_view, 3> kScalarVariables = {"papers", "cites", "h"};

[[nodiscard]] inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[nodiscard]] inline std::string uppercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

[[nodiscard]] inline std::string variable_name(std::string_view prefix,
                                               const IndicatorName& family) {
  return std::string(prefix) + "_" + lowercase(family.str());
}

[[nodiscard]] inline std::optional<double> measure(const FamilyColumns& f, std::size_t index) {
  switch (index) {
    case 0: return f.p;
    case 1: return f.i;
    case 2: return f.r;
    case 3: return f.p_over_i;
    case 4: return f.p_over_r;
    case 5: return f.i_over_r;
    case 6: return f.pi_over_2r;
  }
  return std::nullopt;
}

inline std::optional<double>& measure_ref(FamilyColumns& f, std::size_t index) {
  switch (index) {
    case 0: return f.p;
    case 1: return f.i;
    case 2: return f.r;
    case 3: return f.p_over_i;
    case 4: return f.p_over_r;
    case 5: return f.i_over_r;
    default: return f.pi_over_2r;
  }
}

/// Variable names available on a row, in column order.
[[nodiscard]] inline std::vector<std::string> row_variables(const AuthorTableRow& row) {
  std::vector<std::string> out(kScalarVariables.begin(), kScalarVariables.end());
  for (const auto& f : row.families) {
    for (auto prefix : kMeasurePrefixes) out.push_back(variable_name(prefix, f.family));
  }
  return out;
}

/// Looks up a variable by name. Returns false in `known` when the name does
/// not exist on this row.
[[nodiscard]] inline std::optional<double> row_value(const AuthorTableRow& row,
                                                     std::string_view name, bool& known) {
  known = true;
  auto as_double = [](const std::optional<std::int64_t>& v) -> std::optional<double> {
    if (!v) return std::nullopt;
    return static_cast<double>(*v);
  };
  if (name == "papers") return as_double(row.papers);
  if (name == "cites") return as_double(row.cites);
  if (name == "h") return as_double(row.h);
  for (const auto& f : row.families) {
    for (std::size_t k = 0; k < kMeasurePrefixes.size(); ++k) {
      if (name == variable_name(kMeasurePrefixes[k], f.family)) return measure(f, k);
    }
  }
  known = false;
  return std::nullopt;
}

/// Human label: "# Papers", "P/I_SJR", ...
[[nodiscard]] inline std::string variable_label(std::string_view name) {
  if (name == "papers") return "# Papers";
  if (name == "cites") return "# Cites";
  if (name == "h") return "h";
  const auto us = name.find('_');
  if (us == std::string_view::npos) return std::string(name);
  const auto prefix = name.substr(0, us);
  for (std::size_t k = 0; k < kMeasurePrefixes.size(); ++k) {
    if (prefix == kMeasurePrefixes[k]) {
      return std::string(kMeasureLabels[k]) + "_" + uppercase(name.substr(us + 1));
    }
  }
  return std::string(name);
}

[[nodiscard]] inline FamilyColumns family_columns(const IndicatorProfile& profile) {
  FamilyColumns f;
  f.family = profile.indicator;
  f.p = profile.p;
  f.i = profile.i;
  f.r = profile.r;
  f.p_over_i = profile.ratios.p_over_i;
  f.p_over_r = profile.ratios.p_over_r;
  f.i_over_r = profile.ratios.i_over_r;
  f.pi_over_2r = profile.ratios.pi_over_2r;
  return f;
}

}  // namespace acp
