#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sos_sparse {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto its documented exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class MissingVariableError : public Error {
 public:
  explicit MissingVariableError(std::size_t var)
      : Error("no value assigned to variable x" + std::to_string(var)),
        variable_(var) {}
  std::size_t variable() const { return variable_; }

 private:
  std::size_t variable_;
};

class UnsupportedOrderError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  SizeError(const std::string& what, std::size_t count, std::size_t cap)
      : Error(what + " (" + std::to_string(count) + " > cap " +
              std::to_string(cap) + ")"),
        reason_(what),
        count_(count),
        cap_(cap) {}
  const std::string& reason() const { return reason_; }
  std::size_t count() const { return count_; }
  std::size_t cap() const { return cap_; }

 private:
  std::string reason_;
  std::size_t count_;
  std::size_t cap_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Raised when a generated instance fails one of its validity bounds; the
// message names the violated bound.
class ConstructionFailed : public Error {
 public:
  ConstructionFailed(std::string bound, const std::string& detail)
      : Error(bound + ": " + detail), bound_(std::move(bound)) {}
  const std::string& bound() const { return bound_; }

 private:
  std::string bound_;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class MissingTruthError : public Error {
 public:
  using Error::Error;
};

}  // namespace sos_sparse
