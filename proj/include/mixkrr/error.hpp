#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixkrr {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// exit codes: config/input/parse errors exit 2, numeric failures exit 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed a value outside an operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A configuration violates a modelling hypothesis (r range, contraction, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A linear solve or decomposition produced non-finite values.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double condition)
      : Error(what + " (condition number estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Malformed file on load.
class ParseError : public InputError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : InputError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mixkrr
