#pragma once

#include <cmath>
#include <concepts>
#include <string_view>

#include <Eigen/Dense>

#include "pgt/mpcqp.hpp"

namespace pgt {

enum class OracleMethod { closed_form, penalized_descent };

inline std::string_view to_string(OracleMethod m) {
  return m == OracleMethod::closed_form ? "closed-form" : "penalized-descent";
}

struct OracleResult {
  Eigen::VectorXd y_star;
  double f_star = 0.0;
  OracleMethod method = OracleMethod::closed_form;
  double grad_norm_at_solution = 0.0;
  bool converged = true;
  bool ill_conditioned = false;  // condition estimate above 1e12
  double condition_estimate = 1.0;
  int iterations = 0;
};

/// Minimizer of (1/2) y' Omega y + c' y + d by a dense symmetric solve.
OracleResult solve_unconstrained(const QpProblem& qp);

/// Anything exposing value/gradient/(generalized) Hessian on dense vectors.
template <typename F>
concept TwiceDifferentiable = requires(const F& f, const Eigen::VectorXd& x) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.gradient(x) } -> std::convertible_to<Eigen::VectorXd>;
  { f.hessian(x) } -> std::convertible_to<Eigen::MatrixXd>;
};

struct DescentOptions {
  double tol = 1e-10;  // on ||grad F|| / (1 + |F|)
  int max_iter = 1000000;
  double armijo = 1e-4;
};

/// Descent with backtracking (halving, Armijo sufficient decrease). The step
/// direction is the generalized Newton direction when it is a descent
/// direction and the negative gradient otherwise.
template <TwiceDifferentiable F>
OracleResult solve_penalized(const F& f, Eigen::VectorXd x, const DescentOptions& opt = {}) {
  OracleResult r;
  r.method = OracleMethod::penalized_descent;
  r.converged = false;
  double fx = f.value(x);
  Eigen::VectorXd g = f.gradient(x);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (g.norm() <= opt.tol * (1.0 + std::abs(fx))) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd dir;
    Eigen::LLT<Eigen::MatrixXd> llt(f.hessian(x));
    if (llt.info() == Eigen::Success) dir = -llt.solve(g);
    double slope = dir.size() ? g.dot(dir) : 0.0;
    if (!(slope < 0.0) || !dir.allFinite()) {
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 80; ++halvings, step *= 0.5) {
      const Eigen::VectorXd trial = x + step * dir;
      const double ft = f.value(trial);
      if (ft <= fx + opt.armijo * step * slope) {
        x = trial;
        fx = ft;
        accepted = true;
        break;
      }
    }
    g = f.gradient(x);
    if (!accepted) break;  // no representable decrease left
  }
  if (!r.converged && g.norm() <= opt.tol * (1.0 + std::abs(fx))) r.converged = true;
  r.iterations = it;
  r.y_star = std::move(x);
  r.f_star = fx;
  r.grad_norm_at_solution = g.norm();
  return r;
}

struct GapResult {
  double gap = 0.0;
  bool clamped = false;  // small negative value attributed to oracle tolerance
};

/// f_current - f_star. Values down to -1e-9 max(1, |f_star|) are clamped to 0
/// and flagged; anything lower throws InconsistencyError.
GapResult optimality_gap(double f_current, double f_star);

}  // namespace pgt
