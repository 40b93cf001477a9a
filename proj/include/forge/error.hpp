#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Base class for every error the library raises. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or caller-supplied arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or semantically invalid input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace forge
