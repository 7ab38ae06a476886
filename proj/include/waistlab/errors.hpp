#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace waistlab {

/// Compact number formatting for error messages.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A coordinate or parameter lies outside the admissible domain.
class DomainError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

/// Iterative solver or root bracket failed.
class NoConvergence : public Error {
public:
  using Error::Error;
};

class StepTooLarge : public Error {
public:
  using Error::Error;
};

class DegenerateFit : public Error {
public:
  using Error::Error;
};

class NoBracket : public Error {
public:
  using Error::Error;
};

class EmptyAubrySet : public Error {
public:
  using Error::Error;
};

class NotConverged : public Error {
public:
  using Error::Error;
};

class NonPositiveEigenvector : public Error {
public:
  using Error::Error;
};

class EigenvalueMismatch : public Error {
public:
  using Error::Error;
};

class InsufficientDecay : public Error {
public:
  using Error::Error;
};

class PreflightFailure : public Error {
public:
  using Error::Error;
};

class MeshFailure : public Error {
public:
  using Error::Error;
};

class DegenerateTriangle : public Error {
public:
  using Error::Error;
};

class ComparisonViolation : public Error {
public:
  using Error::Error;
};

} // namespace waistlab
