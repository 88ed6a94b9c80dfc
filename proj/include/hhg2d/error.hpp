#pragma once

#include <stdexcept>
#include <string>

namespace hhg2d {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Nonpositive physical input, malformed configuration value, etc.
class DomainError : public Error {
 public:
  using Error::Error;
};

// t_r == t_i: stationary momentum and the saddle equations are singular.
class CoalescenceError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Dipole matrix element evaluated on (or next to) its pole.
class PoleError : public Error {
 public:
  using Error::Error;
};

class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class ClassificationRefused : public Error {
 public:
  using Error::Error;
};

// Discretisation too coarse for the requested harmonic orders.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Input files whose columns do not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace hhg2d
