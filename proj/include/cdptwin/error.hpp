#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdptwin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates an operation's precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The operation was called on the wrong kind of object (e.g. a print-direction
/// model handed to the estimator).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A coordinate or index outside the operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `offset()` is the byte offset where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Numerical failure: non-convergence, indefinite matrices and similar.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdptwin
