#pragma once

#include <stdexcept>
#include <string>

namespace elastoflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that are malformed: non-finite samples, bad parameters, fields of the wrong size.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// The film got too thin for the strip mapping (min h <= h_min).
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double residual, long iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const { return residual_; }
  long iterations() const { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace elastoflow
