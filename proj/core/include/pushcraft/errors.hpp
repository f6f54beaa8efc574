#pragma once

#include <stdexcept>
#include <string>

namespace pushcraft {

/// Invalid configuration or argument supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kernel matrix could not be factorized even after jitter escalation.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every sampled rollout had a non-finite cost.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state lies outside the region a cost map or constraint set covers.
class ConstraintViolation : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File-system failure, message includes the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pushcraft
