#pragma once

#include <stdexcept>
#include <string>

namespace tvvar {

/// Coarse failure class; the CLI maps it to an exit code.
enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Kernel window at some evaluation point contains no observations.
class BandwidthTooSmall : public NumericalError {
public:
  BandwidthTooSmall(double tau, double h)
      : NumericalError("bandwidth too small: empty kernel window at tau=" + std::to_string(tau) +
                       " with h=" + std::to_string(h)),
        tau_(tau), h_(h) {}
  double tau() const noexcept { return tau_; }
  double bandwidth() const noexcept { return h_; }

private:
  double tau_;
  double h_;
};

/// Weighted Gram matrix is numerically singular at `tau`.
class SingularDesign : public NumericalError {
public:
  SingularDesign(double tau, double condition)
      : NumericalError("singular design at tau=" + std::to_string(tau) +
                       " (condition number " + std::to_string(condition) + ")"),
        tau_(tau), condition_(condition) {}
  double tau() const noexcept { return tau_; }
  double condition() const noexcept { return condition_; }

private:
  double tau_;
  double condition_;
};

/// Cholesky factorization hit a non-positive pivot. `pivot` is 1-based.
class FactorizationFailure : public NumericalError {
public:
  explicit FactorizationFailure(int pivot)
      : NumericalError("Cholesky factorization failed at pivot " + std::to_string(pivot)),
        pivot_(pivot) {}
  int pivot() const noexcept { return pivot_; }

private:
  int pivot_;
};

class ConvergenceFailure : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Companion matrix has spectral radius >= 1 where stability is required.
class NonStationary : public NumericalError {
public:
  NonStationary(double tau, double radius)
      : NumericalError("non-stationary at tau=" + std::to_string(tau) +
                       " (spectral radius " + std::to_string(radius) + ")"),
        tau_(tau), radius_(radius) {}
  double tau() const noexcept { return tau_; }
  double radius() const noexcept { return radius_; }

private:
  double tau_;
  double radius_;
};

} // namespace tvvar
