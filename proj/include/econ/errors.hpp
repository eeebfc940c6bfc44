#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace econ {

// Precondition violations on pure operations (bad k, empty inputs, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Token totals exceeding the int64 range.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// A prover or verifier could not produce a result (after the configured retry).
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output files that cannot be written or input files that cannot be read.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed wire payload. Carries an excerpt of the raw bytes.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::string excerpt)
      : std::runtime_error(what + " (payload: " + excerpt + ")"),
        excerpt_(std::move(excerpt)) {}

  const std::string& excerpt() const noexcept { return excerpt_; }

  static std::string Excerpt(const std::string& raw, std::size_t limit = 120) {
    return raw.size() <= limit ? raw : raw.substr(0, limit) + "...";
  }

 private:
  std::string excerpt_;
};

// Configuration file or flag problems. line() is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace econ
