#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "acp/error.hpp"
#include "acp/numeric.hpp"

namespace acp::stats {

struct DescriptiveSummary {
  std::size_t n = 0;
  double median = 0.0;
  double mean = 0.0;
  double sample_std = 0.0;  // divisor n-1; 0 when n == 1
  double min = 0.0;
  double max = 0.0;
  double range = 0.0;
};

struct BoxplotSummary {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;   // sample minimum
  double whisker_high = 0.0;  // sample maximum
};

namespace detail {

inline std::vector<double> sorted_checked(std::span<const double> values, const char* what) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": empty input");
  }
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": non-finite input");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

inline double median_of_sorted(const std::vector<double>& s) {
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : (s[n / 2 - 1] + s[n / 2]) / 2.0;
}

inline double mean_of(std::span<const double> values) {
  return kahan_sum(values) / static_cast<double>(values.size());
}

inline double sum_sq_dev(std::span<const double> values, double center) {
  KahanSum s;
  for (double v : values) s.add((v - center) * (v - center));
  return s.value();
}

}  // namespace detail

/// Linear interpolation between order statistics at 1-based position
/// 1 + (n-1)q. All quartile computations route through here.
[[nodiscard]] inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

[[nodiscard]] inline double median(std::span<const double> values) {
  return detail::median_of_sorted(detail::sorted_checked(values, "median"));
}

[[nodiscard]] inline DescriptiveSummary describe(std::span<const double> values) {
  const auto sorted = detail::sorted_checked(values, "describe");
  DescriptiveSummary s;
  s.n = sorted.size();
  s.median = detail::median_of_sorted(sorted);
  s.mean = detail::mean_of(sorted);
  s.sample_std = s.n > 1 ? std::sqrt(detail::sum_sq_dev(sorted, s.mean) /
                                     static_cast<double>(s.n - 1))
                         : 0.0;
  s.min = sorted.front();
  s.max = sorted.back();
  s.range = s.max - s.min;
  return s;
}

[[nodiscard]] inline BoxplotSummary boxplot(std::span<const double> values) {
  const auto sorted = detail::sorted_checked(values, "boxplot");
  BoxplotSummary b;
  b.q1 = quantile_sorted(sorted, 0.25);
  b.q2 = detail::median_of_sorted(sorted);
  b.q3 = quantile_sorted(sorted, 0.75);
  b.whisker_low = sorted.front();
  b.whisker_high = sorted.back();
  return b;
}

/// Named groups of values, in insertion order. Every group is non-empty and
/// names are unique.
class GroupedSample {
 public:
  using Group = std::pair<std::string, std::vector<double>>;

  GroupedSample() = default;
  explicit GroupedSample(std::vector<Group> groups) {
    for (auto& [name, values] : groups) add(std::move(name), std::move(values));
  }

  void add(std::string name, std::vector<double> values) {
    if (values.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "group '" + name + "' is empty");
    }
    for (const auto& g : groups_) {
      if (g.first == name) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate group '" + name + "'");
      }
    }
    groups_.emplace_back(std::move(name), std::move(values));
  }

  [[nodiscard]] const std::vector<Group>& groups() const noexcept { return groups_; }
  [[nodiscard]] std::size_t size() const noexcept { return groups_.size(); }

  [[nodiscard]] std::vector<double> pooled() const {
    std::vector<double> all;
    for (const auto& g : groups_) all.insert(all.end(), g.second.begin(), g.second.end());
    return all;
  }

 private:
  std::vector<Group> groups_;
};

/// Sums of squares (not mean squares): within = sum over groups of
/// (n_g - 1) s_g^2, between = sum of n_g (mean_g - grand)^2.
struct VarianceDecomposition {
  double within_ss = 0.0;
  double between_ss = 0.0;
  double total_ss = 0.0;
  std::optional<double> pct_reduction;  // 1 - between/within, as a fraction
};

[[nodiscard]] inline VarianceDecomposition variance_decomposition(const GroupedSample& sample) {
  if (sample.size() < 2) {
    throw Error(ErrorCode::kInsufficientGroups,
                "variance decomposition needs at least 2 groups, got " +
                    std::to_string(sample.size()));
  }
  const auto all = sample.pooled();
  for (double v : all) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "variance_decomposition: non-finite input");
    }
  }
  const double grand = detail::mean_of(all);

  KahanSum within, between;
  for (const auto& [name, values] : sample.groups()) {
    const double m = detail::mean_of(values);
    within.add(detail::sum_sq_dev(values, m));
    const double d = m - grand;
    between.add(static_cast<double>(values.size()) * d * d);
  }

  VarianceDecomposition out;
  out.within_ss = within.value();
  out.between_ss = between.value();
  out.total_ss = detail::sum_sq_dev(all, grand);
  if (out.within_ss > 0.0) out.pct_reduction = 1.0 - out.between_ss / out.within_ss;
  return out;
}

enum class Significance { kNone = 0, k90 = 90, k95 = 95, k99 = 99 };

enum class CellStatus {
  kOk,
  kConstantInput,  // one side has zero variance
  kTooFew,         // fewer than 3 complete pairs
};

struct CorrelationCell {
  std::optional<double> r;
  std::size_t n = 0;
  Significance significance = Significance::kNone;
  CellStatus status = CellStatus::kOk;
  std::size_t excluded = 0;  // pairs dropped because either side was undefined
  std::optional<double> p_value;
};

/// Two-tailed p-value of t = r sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom.
[[nodiscard]] inline double correlation_p_value(double r, std::size_t n) {
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = std::fabs(r) * std::sqrt(df / (1.0 - r2));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

[[nodiscard]] inline Significance significance_from_p(double p) {
  if (p < 0.01) return Significance::k99;
  if (p < 0.05) return Significance::k95;
  if (p < 0.10) return Significance::k90;
  return Significance::kNone;
}

namespace detail {

inline void check_lengths(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "correlation: length mismatch " + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()));
  }
}

inline CorrelationCell pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  CorrelationCell cell;
  cell.n = x.size();
  if (cell.n < 3) {
    cell.status = CellStatus::kTooFew;
    return cell;
  }
  const double mx = mean_of(x);
  const double my = mean_of(y);
  KahanSum sxy, sxx, syy;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) {
    cell.status = CellStatus::kConstantInput;
    return cell;
  }
  const double r = std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
  cell.r = r;
  cell.p_value = correlation_p_value(r, cell.n);
  cell.significance = significance_from_p(*cell.p_value);
  return cell;
}

}  // namespace detail

[[nodiscard]] inline CorrelationCell pearson(std::span<const double> x,
                                             std::span<const double> y) {
  detail::check_lengths(x, y);
  return detail::pearson_unchecked(x, y);
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
[[nodiscard]] inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k + 1;
    while (end < n && values[idx[end]] == values[idx[k]]) ++end;
    const double rank = (static_cast<double>(k + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t m = k; m < end; ++m) ranks[idx[m]] = rank;
    k = end;
  }
  return ranks;
}

[[nodiscard]] inline CorrelationCell spearman(std::span<const double> x,
                                              std::span<const double> y) {
  detail::check_lengths(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return detail::pearson_unchecked(rx, ry);
}

enum class CorrelationMethod { kPearson, kSpearman };

/// Drops pairs where either side is undefined, then correlates.
[[nodiscard]] inline CorrelationCell correlate_pairwise(
    std::span<const std::optional<double>> x, std::span<const std::optional<double>> y,
    CorrelationMethod method) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "correlation: length mismatch " + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()));
  }
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] && y[k]) {
      xs.push_back(*x[k]);
      ys.push_back(*y[k]);
    }
  }
  auto cell = method == CorrelationMethod::kPearson ? pearson(xs, ys) : spearman(xs, ys);
  cell.excluded = x.size() - xs.size();
  return cell;
}

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<CorrelationCell>> cells;  // symmetric, unit diagonal

  [[nodiscard]] const CorrelationCell& at(std::size_t a, std::size_t b) const {
    return cells.at(a).at(b);
  }
};

using Column = std::pair<std::string, std::vector<std::optional<double>>>;

[[nodiscard]] inline CorrelationMatrix correlation_matrix(std::span<const Column> columns,
                                                          CorrelationMethod method) {
  if (columns.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "correlation_matrix needs at least 2 columns");
  }
  const std::size_t len = columns.front().second.size();
  for (const auto& c : columns) {
    if (c.second.size() != len) {
      throw Error(ErrorCode::kInvalidArgument,
                  "correlation_matrix: column '" + c.first + "' has a different length");
    }
  }
  CorrelationMatrix m;
  const std::size_t k = columns.size();
  for (const auto& c : columns) m.names.push_back(c.first);
  m.cells.assign(k, std::vector<CorrelationCell>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      CorrelationCell cell;
      if (a == b) {
        std::size_t n = 0;
        for (const auto& v : columns[a].second) n += v.has_value();
        cell.n = n;
        cell.r = 1.0;
        cell.p_value = 0.0;
        cell.significance = Significance::k99;
      } else {
        cell = correlate_pairwise(columns[a].second, columns[b].second, method);
      }
      m.cells[a][b] = cell;
      m.cells[b][a] = cell;
    }
  }
  return m;
}

}  // namespace acp::stats
