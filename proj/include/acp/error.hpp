#pragma once

#include <stdexcept>
#include <string>

namespace acp {

// Error categories double as CLI exit codes (see docs/FORMATS.md).
enum class ErrorCode : int {
  kInvalidArgument = 2,
  kParse = 3,
  kMissingImpact = 4,
  kNoAuthors = 5,
  kInsufficientGroups = 6,
  kIo = 7,
  kValidation = 8,
  kNotFound = 9,
  kTransport = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised under the strict missing-value policy.
class MissingImpactError : public Error {
 public:
  MissingImpactError(std::string journal, int year, std::string indicator)
      : Error(ErrorCode::kMissingImpact,
              "missing impact value for (" + journal + ", " +
                  std::to_string(year) + ") indicator " + indicator),
        journal_(std::move(journal)),
        year_(year),
        indicator_(std::move(indicator)) {}

  [[nodiscard]] const std::string& journal() const noexcept { return journal_; }
  [[nodiscard]] int year() const noexcept { return year_; }
  [[nodiscard]] const std::string& indicator() const noexcept { return indicator_; }

 private:
  std::string journal_;
  int year_;
  std::string indicator_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace acp
