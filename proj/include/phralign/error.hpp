#ifndef PHRALIGN_ERROR_HPP
#define PHRALIGN_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phralign {

enum class ErrorKind {
  invalid_argument,
  coverage_conflict,
  malformed_corpus,
  malformed_alignment,
  format_error,
  malformed_markup,
  conflicting_constraints,
  rule_not_applicable,
  no_derivation,
  oracle_too_large,
  no_data,
  corpus_mismatch,
  invalid_input,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::coverage_conflict: return "coverage-conflict";
    case ErrorKind::malformed_corpus: return "malformed-corpus";
    case ErrorKind::malformed_alignment: return "malformed-alignment";
    case ErrorKind::format_error: return "format-error";
    case ErrorKind::malformed_markup: return "malformed-markup";
    case ErrorKind::conflicting_constraints: return "conflicting-constraints";
    case ErrorKind::rule_not_applicable: return "rule-not-applicable";
    case ErrorKind::no_derivation: return "no-derivation";
    case ErrorKind::oracle_too_large: return "oracle-too-large";
    case ErrorKind::no_data: return "no-data";
    case ErrorKind::corpus_mismatch: return "corpus-mismatch";
    case ErrorKind::invalid_input: return "invalid-input";
  }
  return "unknown";
}

/// Library-wide exception. `line()` is the 1-based input line the error
/// refers to, or 0 when the error is not tied to a line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::size_t line = 0)
      : std::runtime_error(format(kind, message, line)), kind_(kind), line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message, std::size_t line) {
    std::string out = to_string(kind);
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    out += ": ";
    out += message;
    return out;
  }

  ErrorKind kind_;
  std::size_t line_;
};

}  // namespace phralign

#endif
