/*!
 * This file is part of kpls.
 *
 * Copyright (c) 2026 kpls contributors
 * Distributed under the MIT license. See LICENSE for details.
 */
#ifndef KPLS_ERRORS_HPP_
#define KPLS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace kpls {

/// Base class of every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An argument violates a documented precondition (range, sign, shape of a
/// scalar parameter).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Matrix or vector sizes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Two function-space elements from different operator contexts were combined.
class ContextError : public Error {
 public:
  using Error::Error;
};

/// Data left the domain the kernel or preprocessing contract requires.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be invertible is numerically singular.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kpls

#endif  // KPLS_ERRORS_HPP_
