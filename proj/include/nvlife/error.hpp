#pragma once

#include <stdexcept>
#include <string>

namespace nvlife {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TraceError : public Error {
 public:
  using Error::Error;
};

// A block was asked to occupy more live bytes than a frame provides.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized data: compressed payloads, map dumps, checkpoints.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace nvlife
