#pragma once

#include <stdexcept>
#include <string>

namespace lcw {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or model dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, truncated payload, bad schema).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration entries.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset could not be produced or is unsuitable for the requested run.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Model bundle lacks a network or was used out of order.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace lcw
