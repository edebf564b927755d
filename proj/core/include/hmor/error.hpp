#pragma once

#include <stdexcept>
#include <string>

namespace hmor {

enum class ErrorKind {
  kInvalidInput,
  kInvalidDepth,
  kBehindCamera,
  kGeneration,
  kNumerical,
  kSolver,
  kIo,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind lets
/// callers (the CLI in particular) map failures onto exit codes without
/// string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what)
      : Error(ErrorKind::kInvalidInput, what) {}
};

class InvalidDepth : public Error {
 public:
  explicit InvalidDepth(const std::string& what)
      : Error(ErrorKind::kInvalidDepth, what) {}
};

class BehindCamera : public Error {
 public:
  explicit BehindCamera(const std::string& what)
      : Error(ErrorKind::kBehindCamera, what) {}
};

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& what)
      : Error(ErrorKind::kGeneration, what) {}
};

/// Raised when an objective term evaluates to a non-finite value. `term()`
/// names the offending term.
class NumericalError : public Error {
 public:
  NumericalError(std::string term, const std::string& what)
      : Error(ErrorKind::kNumerical, what), term_(std::move(term)) {}

  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what)
      : Error(ErrorKind::kSolver, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

}  // namespace hmor
