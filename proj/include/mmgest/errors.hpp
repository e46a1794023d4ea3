#pragma once

#include <stdexcept>
#include <string>

namespace mmgest {

// Every library error carries a short machine-readable category that the CLI
// prints as the first token of its one-line error message.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error("invalid-argument", what) {}
};

struct OutOfRange : Error {
  explicit OutOfRange(const std::string& what) : Error("out-of-range", what) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

struct NoSignal : Error {
  explicit NoSignal(const std::string& what) : Error("no-signal", what) {}
};

struct EmptyGesture : Error {
  explicit EmptyGesture(const std::string& what) : Error("empty-gesture", what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io", what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("parse", "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

}  // namespace mmgest
