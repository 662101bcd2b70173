#pragma once

#include <stdexcept>
#include <string>

namespace cfpn {

/// Incompatible tensor shapes or dimension preconditions.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed epoch, checkpoint or manifest file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, filter settings or config keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed config value; the message carries the line number.
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Backward called on an incomplete forward trace.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cfpn
