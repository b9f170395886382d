#pragma once

#include <stdexcept>
#include <string>

namespace promptseg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
struct PreconditionError : Error {
  using Error::Error;
};

struct DimensionMismatch : PreconditionError {
  using PreconditionError::PreconditionError;
};

/// The metric has no defined value for the given input (e.g. single-class AUROC).
struct UndefinedMetric : Error {
  using Error::Error;
};

struct TransportError : Error {
  using Error::Error;
};

/// Peer answered, but with a message that violates the wire schema or version.
struct ProtocolError : Error {
  using Error::Error;
};

struct CapabilityError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace promptseg
