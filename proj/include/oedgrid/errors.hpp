#pragma once

#include <stdexcept>
#include <string>

namespace oedgrid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent inputs: wrong vector sizes, invalid indices, bad configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Failures of an iterative or factorization step. The CLI maps these to exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularJacobian : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularKktSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InfeasibleStart : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A numerical failure inside an experiment run, tagged with where it happened.
class RunError : public NumericalError {
 public:
  RunError(int iteration, std::string stage, const std::string& cause)
      : NumericalError("iteration " + std::to_string(iteration) + " (" + stage + "): " + cause),
        iteration_(iteration),
        stage_(std::move(stage)) {}

  int iteration() const noexcept { return iteration_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  int iteration_;
  std::string stage_;
};

class ZeroImpedance : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Case-file errors carry the 1-based line number (0 when not tied to a line).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

class MissingBlock : public ParseError {
 public:
  using ParseError::ParseError;
};

class MalformedRow : public ParseError {
 public:
  using ParseError::ParseError;
};

class UnsupportedFeature : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace oedgrid
