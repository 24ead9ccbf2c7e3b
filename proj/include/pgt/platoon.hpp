#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pgt {

struct SpeedLimits {
  double v_min = 0.0;
  double v_max = 30.0;
  double a_min = -3.0;
  double a_max = 3.0;
};

/// Leader state at time k and its input profile u_0(k+h), h = 0..T-1.
struct LeaderProfile {
  double position = 0.0;
  double velocity = 0.0;
  Eigen::VectorXd input;
};

/// Leader (index 0) followed by n vehicles, at a fixed MPC time instant k.
///
/// Units are SI: metres, seconds, m/s, m/s^2. Follower arrays are indexed
/// 0..n-1 for vehicles 1..n.
struct PlatoonScenario {
  int n = 0;
  double tau = 0.1;
  int horizon = 1;
  double spacing = 20.0;   // desired gap delta
  double length = 4.0;     // vehicle length l
  double reaction = 0.5;   // reaction time epsilon
  SpeedLimits limits;
  LeaderProfile leader;
  Eigen::VectorXd positions;
  Eigen::VectorXd velocities;

  /// Throws InvalidParameter on a bad parameter or an infeasible start.
  void validate() const;

  Eigen::Index decision_size() const { return static_cast<Eigen::Index>(n) * horizon; }

  /// Position of u_vehicle(k+step) in y = (y_1, ..., y_n), y_i = (u_i(k), ..., u_i(k+T-1)).
  Eigen::Index index(int vehicle, int step) const {
    return static_cast<Eigen::Index>(vehicle - 1) * horizon + step;
  }

  /// Positions/velocities including the leader at entry 0.
  Eigen::VectorXd all_positions() const;
  Eigen::VectorXd all_velocities() const;
};

/// Double-integrator step.
template <typename Scalar>
std::pair<Scalar, Scalar> step_dynamics(Scalar p, Scalar v, Scalar u, Scalar tau) {
  return {p + tau * v + tau * tau / Scalar(2) * u, v + tau * u};
}

/// Predicted states over the horizon. Row 0 is the leader, column m is time k+m.
struct Trajectory {
  Eigen::MatrixXd position;  // (n+1) x (T+1)
  Eigen::MatrixXd velocity;  // (n+1) x (T+1)
  Eigen::MatrixXd input;     // (n+1) x T, row 0 is u_0
};

/// Rolls the platoon forward under a follower plan (n x T; row i-1 drives vehicle i).
Trajectory rollout(const PlatoonScenario& scn, const Eigen::MatrixXd& plan);

/// Reshapes the stacked decision vector y into an n x T plan.
Eigen::MatrixXd plan_from_decision(const PlatoonScenario& scn, const Eigen::VectorXd& y);

struct ErrorVectors {
  Eigen::VectorXd position;  // e_p,i = p_{i-1} - p_i - delta
  Eigen::VectorXd velocity;  // e_v,i = v_{i-1} - v_i
  Eigen::VectorXd input;     // e_u,i = u_{i-1} - u_i
};

/// Arguments carry the leader at index 0 and have length n+1.
ErrorVectors error_vectors(const PlatoonScenario& scn, const Eigen::VectorXd& positions,
                           const Eigen::VectorXd& velocities, const Eigen::VectorXd& inputs);

/// Closed-form m-step prediction of (e_p, e_v) from the input-error sequence
/// e_u(k), ..., e_u(k+m-1) stored as the first m columns of `input_errors`.
std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_errors(const Eigen::VectorXd& position_error,
                                                           const Eigen::VectorXd& velocity_error,
                                                           const Eigen::MatrixXd& input_errors, double tau,
                                                           int m);

enum class ConstraintKind { velocity, acceleration, spacing };

struct ConstraintViolation {
  ConstraintKind kind;
  int vehicle;     // 1..n
  double value;    // offending quantity (v, u, or gap)
  double bound;    // limit that was crossed
};

std::string to_string(ConstraintKind k);

/// Minimum safe gap behind the predecessor: l + eps v - (v - v_min)^2 / (2 a_min).
double required_gap(const PlatoonScenario& scn, double velocity);

/// Checks velocity/input boxes and the predecessor gap for followers 1..n.
/// Arguments carry the leader at index 0 and have length n+1.
std::vector<ConstraintViolation> check_constraints(const PlatoonScenario& scn, const Eigen::VectorXd& positions,
                                                   const Eigen::VectorXd& velocities, const Eigen::VectorXd& inputs);

struct StructureMatrices {
  Eigen::MatrixXd S;      // lower-triangular ones
  Eigen::MatrixXd S_inv;  // 1 on the diagonal, -1 on the first subdiagonal
};

StructureMatrices structure_matrices(int n);

/// S^{-1} (u_0 1_n - u): the input-error vector written through the structure matrix.
Eigen::VectorXd input_errors_via_structure(const StructureMatrices& sm, double leader_input,
                                           const Eigen::VectorXd& follower_inputs);

}  // namespace pgt
