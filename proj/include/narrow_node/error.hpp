#pragma once

#include <stdexcept>
#include <string>

namespace narrow_node {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nonfinite values, out-of-range times, nonpositive parameters.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent weight file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Overflow guard tripped or step budget exhausted.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace narrow_node
