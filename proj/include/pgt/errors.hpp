#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pgt {

/// A parameter outside its documented domain (negative step, n < 3, ...).
struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Communication graph is not connected.
struct ConnectivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Iterative numerical routine failed to converge or hit a singular system.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Oracle and solver disagree beyond tolerance (negative optimality gap).
struct InconsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gradient-tracking state norm exceeded the divergence threshold.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t iteration, double norm, const std::string& context = {})
      : std::runtime_error(context + (context.empty() ? "" : ": ") + "state diverged at iteration " +
                           std::to_string(iteration) + " (max norm " + std::to_string(norm) + ")"),
        iteration_(iteration),
        norm_(norm) {}

  std::size_t iteration() const noexcept { return iteration_; }
  double norm() const noexcept { return norm_; }

 private:
  std::size_t iteration_;
  double norm_;
};

/// Malformed or invalid experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failure while writing or reading artifacts.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pgt
