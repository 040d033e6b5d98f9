#pragma once

#include <stdexcept>
#include <string>

namespace phop {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operand shapes or sizes do not match.
class DimensionError : public Error {
  using Error::Error;
};

/// A hop configuration cannot be applied to the given image size.
class GeometryError : public Error {
  using Error::Error;
};

/// Structured inputs (manifests, bundles, channel sets) violate their schema.
class SchemaError : public Error {
  using Error::Error;
};

/// Numerically or statistically unusable data (too few samples, no labels, ...).
class DataError : public Error {
  using Error::Error;
};

class IoError : public Error {
  using Error::Error;
};

}  // namespace phop
