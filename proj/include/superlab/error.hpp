#pragma once

#include <stdexcept>
#include <string>

namespace superlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  /// Short machine-readable category, e.g. "model" or "quadrature".
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Structural violation in a branching mechanism.
struct ModelError : Error {
  explicit ModelError(const std::string& what) : Error("model", what) {}
};

/// Malformed configuration or command-line input.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// Spectral analysis refused (reducible matrix, unresolved Jordan cluster...).
struct SpectralError : Error {
  explicit SpectralError(const std::string& what) : Error("spectral", what) {}
};

/// A call made outside the operation's domain (wrong regime, bad time...).
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& what) : Error("precondition", what) {}
};

struct QuadratureError : Error {
  QuadratureError(const std::string& what, double estimate, double error_estimate)
      : Error("quadrature", what), estimate(estimate), error_estimate(error_estimate) {}
  double estimate;
  double error_estimate;
};

/// Cumulant ODE step size underflow. Carries the last time reached.
struct CumulantError : Error {
  CumulantError(const std::string& what, double last_time)
      : Error("cumulant", what), last_time(last_time) {}
  double last_time;
};

struct SimulationError : Error {
  explicit SimulationError(const std::string& what) : Error("simulation", what) {}
};

}  // namespace superlab
