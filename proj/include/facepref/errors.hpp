#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace facepref {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (dataset files, reports, provider responses).
class FormatError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class EmptyProfileError : public Error {
 public:
  using Error::Error;
};

/// Training data that lacks one of the two classes.
class SingleClassError : public Error {
 public:
  using Error::Error;
};

/// Width or feature-mode mismatch between a model and its input, or
/// mismatched sequence lengths.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped before meeting its tolerance, or diverged.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  /// Gradient norm (logistic), KKT gap (svm) or last loss (mlp).
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

class CorruptModelError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

/// The embedding provider could not be reached or answered nonsense.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// The request is valid but the current state forbids it.
class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace facepref
