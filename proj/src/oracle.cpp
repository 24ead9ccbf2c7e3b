#include "pgt/oracle.hpp"

#include <algorithm>
#include <string>

#include "pgt/errors.hpp"

namespace pgt {

OracleResult solve_unconstrained(const QpProblem& qp) {
  OracleResult r;
  r.method = OracleMethod::closed_form;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(qp.omega, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw NumericalError("Omega is not positive definite");
  r.condition_estimate = hi / lo;
  r.ill_conditioned = r.condition_estimate > 1e12;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(qp.omega);
  r.y_star = ldlt.solve(-qp.c);
  r.f_star = qp.value(r.y_star);
  r.grad_norm_at_solution = qp.gradient(r.y_star).norm();
  return r;
}

GapResult optimality_gap(double f_current, double f_star) {
  const double gap = f_current - f_star;
  if (gap >= 0.0) return {gap, false};
  if (gap >= -1e-9 * std::max(1.0, std::abs(f_star))) return {0.0, true};
  throw InconsistencyError("negative optimality gap " + std::to_string(gap) + ": objective " +
                           std::to_string(f_current) + " is below the oracle optimum " + std::to_string(f_star));
}

}  // namespace pgt
