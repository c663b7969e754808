#pragma once

#include <stdexcept>
#include <string>

namespace sglmm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Problems with input data: malformed records, unresolvable locations,
/// zero cells, bad configuration. Maps to CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data_error"; }
};

class MalformedRecordError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "malformed_record"; }
};

class ResolutionError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "resolution_error"; }
};

class SpecError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "spec_error"; }
};

/// Adjacency that is not a simple undirected graph.
class StructureError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "structure_error"; }
};

/// Numerical failures: rank deficiency, overflow, out-of-domain arguments.
/// Maps to CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical_error"; }
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "domain_error"; }
};

class OverflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "overflow_error"; }
};

class RankError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "rank_error"; }
};

class ShapeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "shape_error"; }
};

class LengthError : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "length_error"; }
};

}  // namespace sglmm
