#pragma once

#include <stdexcept>
#include <string>

namespace ppr {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Raised when a system has no energy transform (e.g. negative potentials).
class UnsupportedTransformError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or arguments (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or failed numerical procedures (maps to CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

}  // namespace ppr
