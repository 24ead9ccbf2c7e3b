#include "pgt/gtsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "pgt/errors.hpp"
#include "pgt/oracle.hpp"

namespace pgt {

namespace detail {

double total_weight(const CommGraph& g) {
  double s = 0.0;
  for (const auto& [edge, w] : g.weights()) s += w;
  return s;
}

double max_abs(const std::vector<Eigen::VectorXd>& vs) {
  double m = 0.0;
  for (const auto& v : vs) m = std::max(m, v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
  return m;
}

}  // namespace detail

void SolverConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidParameter("solver.alpha must be >= 0");
  if (iters < 1) throw InvalidParameter("solver.iters must be >= 1");
  if (!(init_scale >= 0.0)) throw InvalidParameter("solver.init_scale must be >= 0");
  if (!(divergence_threshold > 0.0)) throw InvalidParameter("solver.divergence_threshold must be positive");
  quantizer.validate();
}

namespace {

std::pair<Eigen::VectorXd, Eigen::VectorXd> sums(const std::vector<NodeState>& states) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(states.front().z.size());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(states.front().grad.size());
  for (const auto& s : states) {
    z += s.z;
    g += s.grad;
  }
  return {z, g};
}

}  // namespace

TrackingBaseline tracking_baseline(const std::vector<NodeState>& states) {
  auto [z, g] = sums(states);
  return {std::move(z), std::move(g)};
}

double tracking_residual(const std::vector<NodeState>& states, const TrackingBaseline& base) {
  const auto [z, g] = sums(states);
  return ((z - base.z_sum) - (g - base.grad_sum)).norm();
}

Eigen::VectorXd network_average(const std::vector<NodeState>& states) {
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(states.front().x.size());
  for (const auto& s : states) avg += s.x;
  return avg / static_cast<double>(states.size());
}

double consensus_residual(const std::vector<NodeState>& states, const Eigen::VectorXd& average) {
  double worst = 0.0;
  for (const auto& s : states) worst = std::max(worst, (s.x - average).norm());
  return worst;
}

double auto_step_rate(const CommGraph& g, const PenalizedObjective& f, double radius) {
  return step_bound(g, lipschitz_estimate(f, radius));
}

}  // namespace pgt
