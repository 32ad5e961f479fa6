#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gramsel {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that is malformed or violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateIdError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InstabilityError : public ValidationError {
 public:
  InstabilityError(const std::string& what, double abscissa) : ValidationError(what), abscissa_(abscissa) {}
  double abscissa() const { return abscissa_; }

 private:
  double abscissa_;
};

/// A computation finished but could not meet its accuracy contract.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ResidualError : public NumericalError {
 public:
  ResidualError(const std::string& what, double residual) : NumericalError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class PsdViolation : public NumericalError {
 public:
  PsdViolation(const std::string& what, double min_eigenvalue)
      : NumericalError(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class UncontrollableError : public NumericalError {
 public:
  UncontrollableError(const std::string& what, int rank) : NumericalError(what), rank_(rank) {}
  int rank() const { return rank_; }

 private:
  int rank_;
};

class EnumerationLimitError : public Error {
 public:
  EnumerationLimitError(const std::string& what, double count) : Error(what), count_(count) {}
  /// C(M, k), as a double because it may not fit in 64 bits.
  double count() const { return count_; }

 private:
  double count_;
};

class SamplingExhaustedError : public Error {
 public:
  using Error::Error;
};

}  // namespace gramsel
