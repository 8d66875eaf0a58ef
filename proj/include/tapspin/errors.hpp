#pragma once

#include <stdexcept>
#include <string>

namespace tapspin {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a transform or operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A law with zero variance cannot be standardized.
class DegenerateLawError : public Error {
 public:
  using Error::Error;
};

// The fixed point leaves the region where lambda* and the resolvent exist.
class BetaTooLargeError : public Error {
 public:
  using Error::Error;
};

// Enumeration requested beyond the configured size guard.
class SizeGuardError : public Error {
 public:
  using Error::Error;
};

// Shapes of vectors/matrices do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Numerical routine failed to bracket/factor where it should have.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed experiment configuration or command-line specs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File could not be read or written; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tapspin
