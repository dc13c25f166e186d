#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// bad input: malformed pmf, size mismatch, out-of-range flag
class ValidationError : public Error {
 public:
  using Error::Error;
};

// argument outside the mathematical domain of an operation
class DomainError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::vector<double> trace = {})
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

class NonSmoothPointError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CoveringFailure : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace gw
