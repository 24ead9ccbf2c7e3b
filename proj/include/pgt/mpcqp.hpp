#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pgt/platoon.hpp"

namespace pgt {

/// Diagonal MPC weights for steps m = 1..T; entry [m-1] holds the n diagonal entries.
struct CostWeights {
  std::vector<Eigen::VectorXd> input;     // Q_u,m
  std::vector<Eigen::VectorXd> position;  // Q_p,m
  std::vector<Eigen::VectorXd> velocity;  // Q_v,m

  static CostWeights constant(int n, int horizon, double qu, double qp, double qv);

  /// Throws InvalidParameter naming the offending entry, e.g. "weights.input[2][0]".
  void validate(int n, int horizon) const;
};

/// (1/2) y_w' H y_w + g' y_w + c restricted to the coordinate window y_w = y[offset, offset+width).
struct QuadraticShare {
  Eigen::Index offset = 0;
  Eigen::Index width = 0;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;

  double value(const Eigen::VectorXd& y) const;
  void add_gradient(const Eigen::VectorXd& y, Eigen::VectorXd& out) const;
};

/// min (1/2) y' Omega y + c' y + d over the stacked plan y = (y_1, ..., y_n),
/// y_i = (u_i(k), ..., u_i(k+T-1)).
struct QpProblem {
  int n = 0;
  int horizon = 0;
  Eigen::MatrixXd omega;
  Eigen::VectorXd c;
  double d = 0.0;
  /// Per-vehicle share of J1+J2+J3: vehicle i owns the i-th summand of each diagonal form.
  std::vector<QuadraticShare> shares;

  Eigen::Index dimension() const { return omega.rows(); }
  double value(const Eigen::VectorXd& y) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& y) const;
};

/// Builds Omega, c, d by expanding the rolled-out error predictions, which are affine in y.
QpProblem build_qp_via_rollout(const PlatoonScenario& scn, const CostWeights& w);

/// J1 + J2 + J3 evaluated directly on a rolled-out trajectory.
double mpc_cost(const PlatoonScenario& scn, const CostWeights& w, const Eigen::VectorXd& y);

/// Block-matrix form of the objective in time-major ordering, with the
/// permutation E mapping vehicle-major y to time-major u, and the linear term
/// assembled from the gamma/zeta offsets.
struct ClosedFormQp {
  Eigen::MatrixXd lambda;       // nT x nT, time-major
  Eigen::MatrixXd permutation;  // E
  Eigen::VectorXd linear;       // vehicle-major
};

ClosedFormQp build_lambda_closed_form(const PlatoonScenario& scn, const CostWeights& w);

struct ClosedFormReport {
  double omega_max_abs_dev = 0.0;
  double omega_max_rel_dev = 0.0;
  double linear_max_abs_dev = 0.0;
  double linear_max_rel_dev = 0.0;
};

ClosedFormReport compare_closed_form(const QpProblem& qp, const ClosedFormQp& closed);

struct PenaltySpec {
  int sigma = 2;
  double lambda = 1.0;
  void validate() const;
};

/// (lambda max{g,0}^sigma, lambda sigma max{g,0}^(sigma-1)).
std::pair<double, double> penalty_value_grad(const PenaltySpec& spec, double g);

/// Second derivative of the penalty in g (zero on the inactive side and for sigma = 1).
double penalty_curvature(const PenaltySpec& spec, double g);

/// g(y) = curvature (s' y_w)^2 + a' y_w + b on a window of y; g <= 0 is feasible.
struct ScalarConstraint {
  Eigen::Index offset = 0;
  Eigen::Index width = 0;
  Eigen::VectorXd linear;
  Eigen::VectorXd selector;
  double curvature = 0.0;
  double constant = 0.0;

  double value(const Eigen::VectorXd& y) const;
  /// out += scale * grad g(y)
  void add_gradient(const Eigen::VectorXd& y, double scale, Eigen::VectorXd& out) const;
};

/// Signed residuals of the input/velocity box of vehicle i (1..n) for its plan block:
/// [u_h - a_max], [a_min - u_h], [tau sum_{h<m} u_h - (v_max - v_i)], [(v_min - v_i) - tau sum_{h<m} u_h].
Eigen::VectorXd box_constraint_values(const PlatoonScenario& scn, int vehicle, const Eigen::VectorXd& block);

/// (H_i)_m for vehicle i (1..n) and step m (1..T); `predecessor_block` is the plan
/// of vehicle i-1 (the leader profile when i = 1).
double spacing_constraint_value(const PlatoonScenario& scn, int vehicle, const Eigen::VectorXd& predecessor_block,
                                const Eigen::VectorXd& block, int m);

std::vector<ScalarConstraint> box_constraints(const PlatoonScenario& scn, int vehicle);
std::vector<ScalarConstraint> spacing_constraints(const PlatoonScenario& scn, int vehicle);

enum class CostSplit { per_vehicle, uniform };

/// F(x) = sum_i F_i(x): quadratic share plus the vehicle's own box and spacing penalties.
///
/// Node indices are 0-based (node i is vehicle i+1). With CostSplit::uniform
/// every node owns J/n instead of its diagonal summands.
class PenalizedObjective {
 public:
  PenalizedObjective(const PlatoonScenario& scn, QpProblem qp, PenaltySpec penalty,
                     CostSplit split = CostSplit::per_vehicle);

  int nodes() const noexcept { return static_cast<int>(shares_.size()); }
  Eigen::Index dimension() const noexcept { return qp_.dimension(); }
  const QpProblem& qp() const noexcept { return qp_; }
  const PenaltySpec& penalty() const noexcept { return penalty_; }
  CostSplit split() const noexcept { return split_; }
  const std::vector<ScalarConstraint>& constraints(int node) const;

  double local_value(int node, const Eigen::VectorXd& x) const;
  Eigen::VectorXd local_gradient(int node, const Eigen::VectorXd& x) const;
  /// out += grad F_node(x); `out` must already have the right size.
  void add_local_gradient(int node, const Eigen::VectorXd& x, Eigen::VectorXd& out) const;

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  /// Generalized Hessian (penalty curvature taken on the active side).
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

  double penalty_value(const Eigen::VectorXd& x) const;

 private:
  void check_node(int node) const;

  QpProblem qp_;
  PenaltySpec penalty_;
  CostSplit split_;
  std::vector<QuadraticShare> shares_;
  std::vector<std::vector<ScalarConstraint>> constraints_;
};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration(const Eigen::MatrixXd& a, double tol = 1e-8, int max_iter = 10000);

/// Upper estimate of the gradient Lipschitz constant of F over the ball ||x|| <= radius:
/// lambda_max(Omega) plus a curvature bound of the penalty terms.
double lipschitz_estimate(const PenalizedObjective& f, double radius);

/// Ball radius covering every plan inside the acceleration box.
double default_domain_radius(const PlatoonScenario& scn);

}  // namespace pgt
