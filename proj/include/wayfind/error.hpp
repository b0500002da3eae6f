#pragma once

#include <stdexcept>
#include <string>

namespace wayfind {

// Exception types; each carries a human-readable message naming the entity.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document or file (schema, CSV, numbers).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A cross-reference (floor id, label) that does not resolve.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

class UnknownLabel : public Error {
 public:
  using Error::Error;
};

class Unreachable : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Recorded data was produced against a different building.
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// Precondition on an argument (eye height, cell size, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace wayfind
