#pragma once

#include <stdexcept>
#include <string>

namespace rarebayes {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or malformed configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A theorem precondition does not hold for the requested run (CLI exit code 3).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical search or integration gave up before meeting its target.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace rarebayes
