#pragma once

#include <random>

#include <Eigen/Dense>

#include "pgt/mpcqp.hpp"
#include "pgt/platoon.hpp"

namespace pgt::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng, -scale, scale);
  return v;
}

/// Moving platoon with a feasible start: every gap exceeds the safe gap by 1..10 m.
inline PlatoonScenario random_scenario(std::mt19937_64& rng, int n, int horizon) {
  PlatoonScenario s;
  s.n = n;
  s.horizon = horizon;
  s.tau = uniform(rng, 0.05, 0.3);
  s.spacing = uniform(rng, 15.0, 35.0);
  s.length = 4.0;
  s.reaction = 0.5;
  s.leader.position = uniform(rng, -5.0, 5.0);
  s.leader.velocity = uniform(rng, 5.0, 15.0);
  s.leader.input = random_vector(rng, horizon, 1.0);
  s.positions.resize(n);
  s.velocities.resize(n);
  double p = s.leader.position;
  for (int i = 0; i < n; ++i) {
    const double v = uniform(rng, 5.0, 15.0);
    p -= required_gap(s, v) + uniform(rng, 1.0, 10.0);
    s.positions(i) = p;
    s.velocities(i) = v;
  }
  return s;
}

/// Platoon already near steady state: leader cruising, followers within 0.5 m/s of it.
inline PlatoonScenario steady_scenario(std::mt19937_64& rng, int n, int horizon) {
  PlatoonScenario s = random_scenario(rng, n, horizon);
  s.leader.input.setZero();
  double p = s.leader.position;
  for (int i = 0; i < n; ++i) {
    const double v = s.leader.velocity + uniform(rng, -0.5, 0.5);
    p -= required_gap(s, v) + uniform(rng, 1.0, 10.0);
    s.positions(i) = p;
    s.velocities(i) = v;
  }
  return s;
}

inline CostWeights random_weights(std::mt19937_64& rng, int n, int horizon) {
  CostWeights w;
  for (int m = 0; m < horizon; ++m) {
    Eigen::VectorXd qu(n), qp(n), qv(n);
    for (int i = 0; i < n; ++i) {
      qu(i) = uniform(rng, 0.5, 1.5);
      qp(i) = uniform(rng, 0.0, 1.5);
      qv(i) = uniform(rng, 0.0, 1.5);
    }
    w.input.push_back(qu);
    w.position.push_back(qp);
    w.velocity.push_back(qv);
  }
  return w;
}

/// The quadratic part of a platoon QP, split across vehicles, with no penalties.
struct QuadraticShares {
  const QpProblem* qp = nullptr;
  int nodes() const { return static_cast<int>(qp->shares.size()); }
  Eigen::Index dimension() const { return qp->dimension(); }
  double value(const Eigen::VectorXd& x) const { return qp->value(x); }
  void add_local_gradient(int i, const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    qp->shares[static_cast<std::size_t>(i)].add_gradient(x, out);
  }
  Eigen::VectorXd local_gradient(int i, const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension());
    add_local_gradient(i, x, g);
    return g;
  }
};

/// Central differences of node `node`'s local value.
inline Eigen::VectorXd central_difference(const PenalizedObjective& f, int node, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x(j)));
    Eigen::VectorXd a = x, b = x;
    a(j) += h;
    b(j) -= h;
    g(j) = (f.local_value(node, a) - f.local_value(node, b)) / (2.0 * h);
  }
  return g;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace pgt::testing
