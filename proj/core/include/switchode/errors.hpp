// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <stdexcept>
#include <string>

namespace switchode {

// Base class for all errors raised by the library. The CLI maps
// ValidationError-derived types to exit code 2 and NumericalError-derived
// types to exit code 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed inputs: bad matrices, broken invariants, schema violations.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical failure on well-formed inputs.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotIrreducible : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonFinite : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LeftRegion : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateBatches : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace switchode
