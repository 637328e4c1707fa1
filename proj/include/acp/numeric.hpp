#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>

namespace acp {

/// Compensated (Neumaier) summation.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

[[nodiscard]] inline double kahan_sum(std::span<const double> values) noexcept {
  KahanSum s;
  for (double v : values) s.add(v);
  return s.value();
}

inline constexpr std::string_view kNaToken = "NA";

/// Fixed-point rendering with round-half-to-even applied to the shortest
/// round-trip decimal form of `value`, so 2.0125 renders as "2.012" at 3
/// decimals even though its binary value sits slightly above the tie.
[[nodiscard]] inline std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return std::string(kNaToken);

  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
  std::string sci(buf, res.ptr);

  const bool negative = sci.front() == '-';
  if (negative) sci.erase(0, 1);
  const auto epos = sci.find('e');
  const int exponent = std::stoi(sci.substr(epos + 1));
  std::string mantissa = sci.substr(0, epos);
  std::string digits;
  for (char c : mantissa) {
    if (c != '.') digits.push_back(c);
  }
  // value = 0.digits * 10^(exponent + 1)
  int point = exponent + 1;
  if (point < 0) {
    digits.insert(0, static_cast<std::size_t>(-point), '0');
    point = 0;
  }
  if (static_cast<int>(digits.size()) < point) digits.append(point - digits.size(), '0');
  std::string int_part = point == 0 ? "0" : digits.substr(0, point);
  std::string frac_part = digits.substr(point);

  if (static_cast<int>(frac_part.size()) > decimals) {
    const std::string kept = frac_part.substr(0, decimals);
    const std::string rest = frac_part.substr(decimals);
    bool round_up = false;
    if (rest[0] > '5') {
      round_up = true;
    } else if (rest[0] == '5') {
      const bool exact_tie = rest.find_first_not_of('0', 1) == std::string::npos;
      if (!exact_tie) {
        round_up = true;
      } else {
        const char last = decimals > 0 ? kept.back() : int_part.back();
        round_up = ((last - '0') % 2) == 1;
      }
    }
    std::string all = int_part + kept;
    if (round_up) {
      int k = static_cast<int>(all.size()) - 1;
      while (k >= 0 && all[k] == '9') all[k--] = '0';
      if (k < 0) {
        all.insert(all.begin(), '1');
        int_part.insert(int_part.begin(), '0');
      } else {
        ++all[k];
      }
    }
    int_part = all.substr(0, int_part.size());
    frac_part = all.substr(int_part.size());
  } else {
    frac_part.append(decimals - frac_part.size(), '0');
  }

  auto nz = int_part.find_first_not_of('0');
  int_part = nz == std::string::npos ? "0" : int_part.substr(nz);
  std::string out = int_part;
  if (decimals > 0) out += "." + frac_part;
  const bool all_zero = out.find_first_not_of("0.") == std::string::npos;
  if (negative && !all_zero) out.insert(out.begin(), '-');
  return out;
}

[[nodiscard]] inline std::string format_fixed(std::optional<double> value, int decimals) {
  return value ? format_fixed(*value, decimals) : std::string(kNaToken);
}

/// Shortest text that parses back to exactly `value`.
[[nodiscard]] inline std::string format_shortest(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

/// Parses a full decimal token; "NA" yields nullopt.
[[nodiscard]] inline std::optional<double> parse_optional_double(std::string_view token,
                                                                 bool& ok) {
  ok = true;
  if (token == kNaToken) return std::nullopt;
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size() || !std::isfinite(v)) {
    ok = false;
    return std::nullopt;
  }
  return v;
}

}  // namespace acp
