#pragma once

#include <stdexcept>
#include <string>

namespace opf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed case text. Carries the 1-based line where parsing failed.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Input is well formed but inconsistent (table sizes, references).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Input uses a feature outside the supported model subset.
class UnsupportedFeature : public Error {
 public:
  using Error::Error;
};

/// Zero series impedance on a branch.
class SingularBranch : public Error {
 public:
  using Error::Error;
};

/// Two cost points share a power coordinate.
class DegenerateSegment : public Error {
 public:
  using Error::Error;
};

/// Piecewise-linear cost with decreasing slopes beyond tolerance.
class ConvexityError : public Error {
 public:
  ConvexityError(int breakpoint, const std::string& what)
      : Error(what), breakpoint_(breakpoint) {}
  /// 0-based index of the first offending breakpoint.
  int breakpoint() const { return breakpoint_; }

 private:
  int breakpoint_;
};

/// Argument outside the domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes that do not match the model.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A formulation could not be built from the given inputs.
class BuildError : public Error {
 public:
  using Error::Error;
};

/// Recomputed cost disagrees with the solver objective.
class RecoveryMismatch : public Error {
 public:
  using Error::Error;
};

/// A benchmark cell is missing data required for a derived metric.
class IncompleteCell : public Error {
 public:
  using Error::Error;
};

}  // namespace opf
