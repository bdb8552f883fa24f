#pragma once

#include <stdexcept>
#include <string>

namespace hyperadapt {

// Error taxonomy mirrored by CLI exit codes: config=2, data=3, numeric=4.

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape incompatibility between tensors; message carries both shapes.
class ShapeError : public NumericError {
 public:
  explicit ShapeError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace hyperadapt
