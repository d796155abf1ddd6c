#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace eyeheat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally valid input that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Solver breakdown, stagnation or non-convergence.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::vector<double> history = {})
      : Error(what), history_(std::move(history)) {}
  /// Residual history (one entry per iteration) when available.
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Invalid run configuration. `path()` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace eyeheat
