#pragma once

#include <stdexcept>
#include <string>

namespace wcp {

// Base class for all recoverable pipeline errors. The CLI maps these to
// exit code 1; anything else escaping main is a bug.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class InvalidPlacementError : public Error {
 public:
  using Error::Error;
};

class EmptyIndexError : public Error {
 public:
  using Error::Error;
};

class EmptyCloudError : public Error {
 public:
  using Error::Error;
};

class DegenerateMeshError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class ResolutionLimitError : public Error {
 public:
  using Error::Error;
};

class DisconnectedSurfaceError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class IsolatedVertexError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class NumericFaultError : public Error {
 public:
  using Error::Error;
};

class OutOfChamberError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wcp
