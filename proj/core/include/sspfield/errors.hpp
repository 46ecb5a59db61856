#pragma once

#include <stdexcept>
#include <string>

namespace sspfield {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Profile data violates a structural precondition (non-monotone depths, NaN speeds, ...).
class InvalidProfile : public Error {
 public:
  using Error::Error;
};

/// Array or matrix dimensions do not match an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A data file is syntactically malformed; the message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A requested split produced no samples.
class EmptySplit : public Error {
 public:
  using Error::Error;
};

/// An operation requiring data received an empty collection.
class EmptyDataset : public Error {
 public:
  using Error::Error;
};

/// A scalar argument lies outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// An API contract was violated (non-scalar loss, untracked input, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic produced NaN/Inf where finite values are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A run configuration is inconsistent or contains unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A referenced file could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sspfield
