#pragma once

#include <stdexcept>
#include <string>

namespace rcnet {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Zero, overflowing or otherwise unusable dimensions.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Operands whose dimensions do not fit together.
class ShapeError : public Error {
public:
  using Error::Error;
};

// A clip too short for the requested temporal operation.
class TemporalError : public ShapeError {
public:
  using ShapeError::ShapeError;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Operation called in the wrong order (e.g. backward without forward).
class StateError : public Error {
public:
  using Error::Error;
};

// Shape failure inside a graph; carries the offending node name.
class GraphError : public Error {
public:
  GraphError(std::string node, const std::string &what)
      : Error("node '" + node + "': " + what), node_(std::move(node)) {}
  const std::string &node() const { return node_; }

private:
  std::string node_;
};

class NumericError : public Error {
public:
  using Error::Error;
};

class SpecError : public Error {
public:
  using Error::Error;
};

class SamplingError : public Error {
public:
  using Error::Error;
};

// File format failures. Subclasses distinguish the load error kinds.
class FormatError : public Error {
public:
  using Error::Error;
};
class MagicError : public FormatError {
public:
  using FormatError::FormatError;
};
class VersionError : public FormatError {
public:
  using FormatError::FormatError;
};
class TruncationError : public FormatError {
public:
  using FormatError::FormatError;
};
class DimMismatchError : public FormatError {
public:
  using FormatError::FormatError;
};

} // namespace rcnet
