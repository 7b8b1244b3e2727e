#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wgram {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: files, documents, request syntax, unknown names.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A syntax error with a location inside some source text.
class SyntaxError : public InputError {
 public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : InputError(what + " at " + std::to_string(line) + ":" + std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A regex uses a construct outside the supported subset.
class UnsupportedConstruct : public InputError {
 public:
  UnsupportedConstruct(const std::string& what, std::size_t position)
      : InputError(what + " at offset " + std::to_string(position)), position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Something well-formed could not be compiled into an operator tree.
class CompileError : public Error {
 public:
  using Error::Error;
};

/// A loop exit or branch point cannot be decided with one token of lookahead.
class AmbiguityError : public CompileError {
 public:
  AmbiguityError(const std::string& what, std::string subexpression)
      : CompileError(what), subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

/// An operator tree violates a structural invariant.
class InvalidOperator : public CompileError {
 public:
  using CompileError::CompileError;
};

/// Raised when the machine rejects a token its own mask permitted.
class MaskSoundnessError : public Error {
 public:
  using Error::Error;
};

}  // namespace wgram
