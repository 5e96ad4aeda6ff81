#pragma once

#include <stdexcept>
#include <string>

namespace unlearn {

// Precondition or invariant violated by caller-supplied data.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file or wire content. `line` is 1-based when known, else 0.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind { kTransport, kStatus, kProtocol, kInjected, kUnknownBackend };

  BackendError(Kind kind, const std::string& what, int attempts = 1, int status = 0)
      : std::runtime_error(what), kind_(kind), attempts_(attempts), status_(status) {}

  Kind kind() const noexcept { return kind_; }
  int attempts() const noexcept { return attempts_; }
  int status() const noexcept { return status_; }
  bool retriable() const noexcept {
    return kind_ == Kind::kTransport || (kind_ == Kind::kStatus && (status_ >= 500 || status_ == 429));
  }

 private:
  Kind kind_;
  int attempts_;
  int status_;
};

}  // namespace unlearn
