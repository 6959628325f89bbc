#pragma once

#include <stdexcept>
#include <string>

namespace edgeguard {

/// Base class for every error raised by the library. The C API maps each
/// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: wrong flag, out-of-domain parameter, missing option.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed file header, bad magic, unsupported dtype.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value violates a container's range invariant.
class RangeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf during forward or backward, or training divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace edgeguard
