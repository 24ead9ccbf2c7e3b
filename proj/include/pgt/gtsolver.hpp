#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pgt/errors.hpp"
#include "pgt/mpcqp.hpp"
#include "pgt/netgraph.hpp"
#include "pgt/oracle.hpp"
#include "pgt/quantize.hpp"

namespace pgt {

/// Initial value of the gradient-tracking variable.
enum class TrackerInit {
  zero,      // z_i(0) = 0
  gradient,  // z_i(0) = grad F_i(x_i(0))
};

struct SolverConfig {
  double alpha = 0.0;
  std::size_t iters = 1;
  QuantizerSpec quantizer;
  std::uint64_t seed = 1;
  double init_scale = 1.0;
  double divergence_threshold = 1e12;
  TrackerInit tracker_init = TrackerInit::zero;

  void validate() const;
};

/// Per-vehicle solver state. `grad` caches grad F_i(x).
struct NodeState {
  Eigen::VectorXd x;
  Eigen::VectorXd z;
  Eigen::VectorXd grad;
};

struct IterTrace {
  std::size_t t = 0;
  double cost = 0.0;                // F at the network average
  double gap = 0.0;                 // cost - F*, NaN without an oracle value
  double consensus_residual = 0.0;  // max_i ||x_i - x_bar||
  double tracking_residual = 0.0;
};

/// Conservation check of one round: sum over nodes of the consensus increments.
struct RoundDiagnostics {
  double x_increment_sum = 0.0;  // ||sum_i sum_j w_ij (q(x_j) - q(x_i))||_inf
  double z_increment_sum = 0.0;
  double x_scale = 0.0;  // (sum_ij w_ij) * max_i ||q(x_i)||_inf
  double z_scale = 0.0;
  double max_norm = 0.0;
};

struct Round {
  std::vector<NodeState> states;
  RoundDiagnostics diagnostics;
};

/// A sum F = sum_i F_i over graph nodes with per-node gradients on the full copy.
template <typename F>
concept SeparableObjective = requires(const F& f, int i, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  { f.nodes() } -> std::convertible_to<int>;
  { f.dimension() } -> std::convertible_to<Eigen::Index>;
  { f.value(x) } -> std::convertible_to<double>;
  { f.local_gradient(i, x) } -> std::convertible_to<Eigen::VectorXd>;
  f.add_local_gradient(i, x, out);
};

namespace detail {
double total_weight(const CommGraph& g);
double max_abs(const std::vector<Eigen::VectorXd>& vs);
}  // namespace detail

/// x_i(0) uniform on [-init_scale, init_scale]^p from the seeded generator, z_i(0) per `tracker_init`.
template <SeparableObjective F>
std::vector<NodeState> init_states(const SolverConfig& cfg, const F& f, const CommGraph& g) {
  if (g.size() != f.nodes()) {
    throw InvalidParameter("graph has " + std::to_string(g.size()) + " nodes but the objective has " +
                           std::to_string(f.nodes()));
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const Eigen::Index p = f.dimension();
  std::vector<NodeState> states(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) {
    auto& s = states[static_cast<std::size_t>(i)];
    s.x.resize(p);
    for (Eigen::Index k = 0; k < p; ++k) s.x(k) = cfg.init_scale * dist(rng);
    s.grad = f.local_gradient(i, s.x);
    s.z = cfg.tracker_init == TrackerInit::gradient ? s.grad : Eigen::VectorXd::Zero(p);
  }
  return states;
}

/// One synchronous round: every node broadcasts q(x_j), q(z_j); all x-updates use
/// round-t messages, then all z-updates use the fresh gradients at x^{t+1}.
/// `t` is the index of the round being executed (reported on divergence).
template <SeparableObjective F>
Round gt_step(const std::vector<NodeState>& states, const CommGraph& g, const F& f, const SolverConfig& cfg,
              std::size_t t) {
  const int n = g.size();
  const auto& q = cfg.quantizer;
  std::vector<Eigen::VectorXd> qx, qz;
  qx.reserve(states.size());
  qz.reserve(states.size());
  for (const auto& s : states) {
    qx.push_back(quantize_vector(q, s.x));
    qz.push_back(quantize_vector(q, s.z));
  }

  Round out;
  out.states = states;
  const Eigen::Index p = f.dimension();
  Eigen::VectorXd x_sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd z_sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd mix(p);

  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    mix.setZero();
    for (const auto& link : g.in_links(i)) mix += link.weight * (qx[static_cast<std::size_t>(link.from)] - qx[k]);
    x_sum += mix;
    out.states[k].x = states[k].x + mix - cfg.alpha * states[k].z;
  }
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    auto& next = out.states[k];
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
    f.add_local_gradient(i, next.x, grad);
    mix.setZero();
    for (const auto& link : g.in_links(i)) mix += link.weight * (qz[static_cast<std::size_t>(link.from)] - qz[k]);
    z_sum += mix;
    next.z = states[k].z + mix + (grad - states[k].grad);
    next.grad = std::move(grad);
  }

  auto& d = out.diagnostics;
  const double w_total = detail::total_weight(g);
  d.x_increment_sum = p ? x_sum.cwiseAbs().maxCoeff() : 0.0;
  d.z_increment_sum = p ? z_sum.cwiseAbs().maxCoeff() : 0.0;
  d.x_scale = w_total * detail::max_abs(qx);
  d.z_scale = w_total * detail::max_abs(qz);
  for (const auto& s : out.states) d.max_norm = std::max({d.max_norm, s.x.norm(), s.z.norm()});
  if (!(d.max_norm <= cfg.divergence_threshold)) throw DivergenceError(t, d.max_norm);
  return out;
}

/// Sums of z_i and grad F_i(x_i) over the nodes at the start of a run.
struct TrackingBaseline {
  Eigen::VectorXd z_sum;
  Eigen::VectorXd grad_sum;
};

TrackingBaseline tracking_baseline(const std::vector<NodeState>& states);

/// ||(sum z_i - sum z_i(0)) - (sum grad F_i(x_i) - sum grad F_i(x_i(0)))||, exactly 0 on the baseline states.
double tracking_residual(const std::vector<NodeState>& states, const TrackingBaseline& base);

Eigen::VectorXd network_average(const std::vector<NodeState>& states);
double consensus_residual(const std::vector<NodeState>& states, const Eigen::VectorXd& average);

struct RunResult {
  std::vector<IterTrace> trace;  // one record per executed round, t = 1..iters
  std::vector<NodeState> states;
  Eigen::VectorXd average;
  /// Worst per-round conservation ratio |increment sum| / scale over the run.
  double worst_x_conservation = 0.0;
  double worst_z_conservation = 0.0;
  /// Worst tracking_residual / (1 + ||sum_i grad F_i(x_i)||) over the run.
  double worst_tracking = 0.0;
  /// ||sum_i x_i + alpha sum_i grad F_i(x_i)|| at exit (diagnostic only).
  double sum_identity_residual = 0.0;
};

/// Runs cfg.iters rounds from init_states. Throws DivergenceError when a state
/// norm exceeds the threshold.
template <SeparableObjective F>
RunResult run(const CommGraph& g, const F& f, const SolverConfig& cfg, std::optional<double> f_star = std::nullopt) {
  cfg.validate();
  RunResult res;
  res.states = init_states(cfg, f, g);
  const TrackingBaseline base = tracking_baseline(res.states);
  res.trace.reserve(cfg.iters);

  for (std::size_t t = 1; t <= cfg.iters; ++t) {
    Round r = gt_step(res.states, g, f, cfg, t);
    res.states = std::move(r.states);
    const auto& d = r.diagnostics;
    if (d.x_scale > 0.0) res.worst_x_conservation = std::max(res.worst_x_conservation, d.x_increment_sum / d.x_scale);
    if (d.z_scale > 0.0) res.worst_z_conservation = std::max(res.worst_z_conservation, d.z_increment_sum / d.z_scale);

    IterTrace rec;
    rec.t = t;
    const Eigen::VectorXd avg = network_average(res.states);
    rec.cost = f.value(avg);
    rec.gap = f_star ? optimality_gap(rec.cost, *f_star).gap : std::numeric_limits<double>::quiet_NaN();
    rec.consensus_residual = consensus_residual(res.states, avg);
    rec.tracking_residual = tracking_residual(res.states, base);
    Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(f.dimension());
    for (const auto& s : res.states) grad_sum += s.grad;
    res.worst_tracking = std::max(res.worst_tracking, rec.tracking_residual / (1.0 + grad_sum.norm()));
    res.trace.push_back(rec);
  }

  res.average = network_average(res.states);
  Eigen::VectorXd identity = Eigen::VectorXd::Zero(f.dimension());
  for (const auto& s : res.states) identity += s.x + cfg.alpha * s.grad;
  res.sum_identity_residual = identity.norm();
  return res;
}

/// |lambda_2| / eta with eta = lipschitz_estimate(f, radius).
double auto_step_rate(const CommGraph& g, const PenalizedObjective& f, double radius);

}  // namespace pgt
