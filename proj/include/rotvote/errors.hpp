#pragma once

#include <stdexcept>
#include <string>

namespace rotvote {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometry with no unique answer (antipodal rays, rank-deficient systems).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Every compatible manifold missed the search cube.
class NoVotes : public Error {
 public:
  using Error::Error;
};

/// A time or index interval outside the available data.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters: grid sizes, intrinsics, CLI values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace rotvote
