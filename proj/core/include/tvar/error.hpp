#pragma once

#include <stdexcept>
#include <string>

namespace tvar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad files, bad shapes, invalid configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not proceed (failed Cholesky, singular Gram, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tvar
