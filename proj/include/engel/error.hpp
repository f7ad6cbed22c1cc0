#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace engel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte offset of the offending token.
class SyntaxError : public Error {
public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class UnknownIdentifier : public Error {
public:
  UnknownIdentifier(const std::string& name, std::size_t offset)
      : Error("unknown identifier '" + name + "' at byte " + std::to_string(offset)),
        name_(name), offset_(offset) {}
  const std::string& name() const noexcept { return name_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  std::string name_;
  std::size_t offset_;
};

/// Evaluation failure (division by zero, unbound variable).
class EvalError : public Error {
public:
  EvalError(const std::string& what, std::string path)
      : Error(what + " (node " + (path.empty() ? std::string("/") : path) + ")"),
        path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

class ChartMismatch : public Error {
public:
  using Error::Error;
};

class DegreeOverflow : public Error {
public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// A numeric verification that an operation performs internally failed.
class VerificationError : public Error {
public:
  using Error::Error;
};

}  // namespace engel
