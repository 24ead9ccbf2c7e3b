#include "pgt/platoon.hpp"

#include <cmath>
#include <string>

#include "pgt/errors.hpp"

namespace pgt {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter("scenario: " + what);
}

}  // namespace

void PlatoonScenario::validate() const {
  require(n >= 1, "n must be >= 1");
  require(tau > 0.0 && std::isfinite(tau), "tau must be positive");
  require(horizon >= 1, "horizon must be >= 1");
  require(length > 0.0, "vehicle length must be positive");
  require(reaction >= 0.0, "reaction time must be nonnegative");
  require(limits.a_min < 0.0 && limits.a_max > 0.0, "need a_min < 0 < a_max");
  require(limits.v_min < limits.v_max, "need v_min < v_max");
  require(positions.size() == n, "positions must have n entries");
  require(velocities.size() == n, "velocities must have n entries");
  require(leader.input.size() == horizon, "leader input profile must have horizon entries");

  const Eigen::VectorXd inputs = Eigen::VectorXd::Zero(n + 1);
  auto violations = check_constraints(*this, all_positions(), all_velocities(), inputs);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw InvalidParameter("scenario: infeasible initial state, " + to_string(v.kind) + " of vehicle " +
                           std::to_string(v.vehicle) + " is " + std::to_string(v.value) + " (bound " +
                           std::to_string(v.bound) + ")");
  }
  for (Eigen::Index h = 0; h < leader.input.size(); ++h) {
    const double u = leader.input(h);
    require(u >= limits.a_min && u <= limits.a_max, "leader input outside [a_min, a_max]");
  }
}

Eigen::VectorXd PlatoonScenario::all_positions() const {
  Eigen::VectorXd p(n + 1);
  p << leader.position, positions;
  return p;
}

Eigen::VectorXd PlatoonScenario::all_velocities() const {
  Eigen::VectorXd v(n + 1);
  v << leader.velocity, velocities;
  return v;
}

Trajectory rollout(const PlatoonScenario& scn, const Eigen::MatrixXd& plan) {
  if (plan.rows() != scn.n || plan.cols() != scn.horizon) {
    throw InvalidParameter("rollout: plan must be " + std::to_string(scn.n) + " x " + std::to_string(scn.horizon));
  }
  const int T = scn.horizon;
  Trajectory tr;
  tr.position.resize(scn.n + 1, T + 1);
  tr.velocity.resize(scn.n + 1, T + 1);
  tr.input.resize(scn.n + 1, T);
  tr.input.row(0) = scn.leader.input.transpose();
  tr.input.bottomRows(scn.n) = plan;
  tr.position.col(0) = scn.all_positions();
  tr.velocity.col(0) = scn.all_velocities();
  for (int m = 0; m < T; ++m) {
    for (int i = 0; i <= scn.n; ++i) {
      const auto [p, v] = step_dynamics(tr.position(i, m), tr.velocity(i, m), tr.input(i, m), scn.tau);
      tr.position(i, m + 1) = p;
      tr.velocity(i, m + 1) = v;
    }
  }
  return tr;
}

Eigen::MatrixXd plan_from_decision(const PlatoonScenario& scn, const Eigen::VectorXd& y) {
  if (y.size() != scn.decision_size()) throw InvalidParameter("decision vector has wrong length");
  // y is vehicle-major, i.e. column-major storage of a T x n matrix.
  return Eigen::Map<const Eigen::MatrixXd>(y.data(), scn.horizon, scn.n).transpose();
}

ErrorVectors error_vectors(const PlatoonScenario& scn, const Eigen::VectorXd& positions,
                           const Eigen::VectorXd& velocities, const Eigen::VectorXd& inputs) {
  const int n = scn.n;
  ErrorVectors e;
  e.position = positions.head(n) - positions.tail(n) - Eigen::VectorXd::Constant(n, scn.spacing);
  e.velocity = velocities.head(n) - velocities.tail(n);
  e.input = inputs.head(n) - inputs.tail(n);
  return e;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_errors(const Eigen::VectorXd& position_error,
                                                           const Eigen::VectorXd& velocity_error,
                                                           const Eigen::MatrixXd& input_errors, double tau,
                                                           int m) {
  if (m < 1 || m > input_errors.cols()) throw InvalidParameter("predict_errors: step m out of range");
  Eigen::VectorXd ev = velocity_error;
  Eigen::VectorXd ep = position_error + m * tau * velocity_error;
  for (int h = 0; h < m; ++h) {
    ev += tau * input_errors.col(h);
    ep += tau * tau * (2.0 * (m - h) - 1.0) / 2.0 * input_errors.col(h);
  }
  return {ep, ev};
}

std::string to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::velocity: return "velocity";
    case ConstraintKind::acceleration: return "acceleration";
    case ConstraintKind::spacing: return "spacing";
  }
  return "unknown";
}

double required_gap(const PlatoonScenario& scn, double velocity) {
  const double dv = velocity - scn.limits.v_min;
  return scn.length + scn.reaction * velocity - dv * dv / (2.0 * scn.limits.a_min);
}

std::vector<ConstraintViolation> check_constraints(const PlatoonScenario& scn, const Eigen::VectorXd& positions,
                                                   const Eigen::VectorXd& velocities, const Eigen::VectorXd& inputs) {
  std::vector<ConstraintViolation> out;
  const auto& lim = scn.limits;
  for (int i = 1; i <= scn.n; ++i) {
    const double v = velocities(i);
    if (v < lim.v_min) out.push_back({ConstraintKind::velocity, i, v, lim.v_min});
    if (v > lim.v_max) out.push_back({ConstraintKind::velocity, i, v, lim.v_max});
    const double u = inputs(i);
    if (u < lim.a_min) out.push_back({ConstraintKind::acceleration, i, u, lim.a_min});
    if (u > lim.a_max) out.push_back({ConstraintKind::acceleration, i, u, lim.a_max});
    const double gap = positions(i - 1) - positions(i);
    const double need = required_gap(scn, v);
    if (gap < need) out.push_back({ConstraintKind::spacing, i, gap, need});
  }
  return out;
}

StructureMatrices structure_matrices(int n) {
  if (n < 1) throw InvalidParameter("structure_matrices: n must be >= 1");
  StructureMatrices sm;
  sm.S = Eigen::MatrixXd::Ones(n, n).triangularView<Eigen::Lower>();
  sm.S_inv = Eigen::MatrixXd::Identity(n, n);
  for (int i = 1; i < n; ++i) sm.S_inv(i, i - 1) = -1.0;
  return sm;
}

Eigen::VectorXd input_errors_via_structure(const StructureMatrices& sm, double leader_input,
                                           const Eigen::VectorXd& follower_inputs) {
  const Eigen::VectorXd lead = Eigen::VectorXd::Constant(follower_inputs.size(), leader_input);
  return sm.S_inv * (lead - follower_inputs);
}

}  // namespace pgt
