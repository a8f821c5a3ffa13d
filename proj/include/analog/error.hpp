#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace analog {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// A stage produced no survivors.
class EmptyStageError : public Error {
public:
  EmptyStageError(const std::string& stage)
      : Error("stage '" + stage + "' produced no candidates"), stage_(stage) {}

  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

}  // namespace analog
