#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace hp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value (h <= 0, n > dim, alpha outside (0,1), ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Malformed input data: non-finite samples, non-Hermitian tabulated rows.
class InputError : public Error {
public:
  InputError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  explicit InputError(const std::string& what) : Error(what) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_ = 0;
};

/// Step-size underflow or non-finite state during an ODE integration.
class IntegrationError : public Error {
public:
  IntegrationError(const std::string& what, double location)
      : Error(what + " at r = " + std::to_string(location)), location_(location) {}
  double location() const noexcept { return location_; }

private:
  double location_;
};

/// Jost matrix numerically singular at a real wavenumber.
class ResonanceError : public Error {
public:
  explicit ResonanceError(std::complex<double> k)
      : Error("Jost matrix singular (possible resonance) at k = " + std::to_string(k.real()) +
              (k.imag() < 0 ? " - " : " + ") + std::to_string(std::abs(k.imag())) + "i"),
        k_(k) {}
  std::complex<double> k() const noexcept { return k_; }

private:
  std::complex<double> k_;
};

/// Matrix that must be invertible has condition number above the refusal threshold.
class ConditioningError : public Error {
public:
  ConditioningError(const std::string& what, double cond)
      : Error(what + " (cond = " + std::to_string(cond) + ")"), cond_(cond) {}
  double cond() const noexcept { return cond_; }

private:
  double cond_;
};

/// A bound that holds by theory was violated; signals a solver bug, not a user error.
class InternalConsistencyError : public Error {
public:
  using Error::Error;
};

}  // namespace hp
