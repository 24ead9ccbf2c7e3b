#include "pgt/mpcqp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pgt/errors.hpp"

namespace pgt {

namespace {

struct Affine {
  Eigen::VectorXd coef;
  double offset = 0.0;
};

Affine operator+(const Affine& a, const Affine& b) { return {a.coef + b.coef, a.offset + b.offset}; }
Affine operator-(const Affine& a, const Affine& b) { return {a.coef - b.coef, a.offset - b.offset}; }
Affine operator*(double s, const Affine& a) { return {s * a.coef, s * a.offset}; }

/// Window of coordinates vehicle i's cost and spacing terms touch: blocks i-1 and i.
std::pair<Eigen::Index, Eigen::Index> coupling_window(const PlatoonScenario& scn, int vehicle) {
  if (vehicle == 1) return {scn.index(1, 0), scn.horizon};
  return {scn.index(vehicle - 1, 0), 2 * static_cast<Eigen::Index>(scn.horizon)};
}

void accumulate(QuadraticShare& share, double weight, const Affine& r) {
  const auto a = r.coef.segment(share.offset, share.width);
  share.hessian.noalias() += weight * a * a.transpose();
  share.linear.noalias() += weight * r.offset * a;
  share.constant += 0.5 * weight * r.offset * r.offset;
}

void check_weight_vector(const std::vector<Eigen::VectorXd>& q, const char* name, int n, int horizon,
                         bool strictly_positive) {
  if (static_cast<int>(q.size()) != horizon) {
    throw InvalidParameter(std::string("weights.") + name + " needs " + std::to_string(horizon) + " entries");
  }
  for (int m = 0; m < horizon; ++m) {
    if (q[static_cast<std::size_t>(m)].size() != n) {
      throw InvalidParameter(std::string("weights.") + name + "[" + std::to_string(m) + "] needs " +
                             std::to_string(n) + " entries");
    }
    for (int i = 0; i < n; ++i) {
      const double v = q[static_cast<std::size_t>(m)](i);
      const bool ok = strictly_positive ? v > 0.0 : v >= 0.0;
      if (!ok || !std::isfinite(v)) {
        throw InvalidParameter(std::string("weights.") + name + "[" + std::to_string(m) + "][" +
                               std::to_string(i) + "] must be " + (strictly_positive ? "> 0" : ">= 0") +
                               ", got " + std::to_string(v));
      }
    }
  }
}

}  // namespace

CostWeights CostWeights::constant(int n, int horizon, double qu, double qp, double qv) {
  CostWeights w;
  for (int m = 0; m < horizon; ++m) {
    w.input.push_back(Eigen::VectorXd::Constant(n, qu));
    w.position.push_back(Eigen::VectorXd::Constant(n, qp));
    w.velocity.push_back(Eigen::VectorXd::Constant(n, qv));
  }
  return w;
}

void CostWeights::validate(int n, int horizon) const {
  check_weight_vector(input, "input", n, horizon, /*strictly_positive=*/true);
  check_weight_vector(position, "position", n, horizon, false);
  check_weight_vector(velocity, "velocity", n, horizon, false);
}

double QuadraticShare::value(const Eigen::VectorXd& y) const {
  const auto yw = y.segment(offset, width);
  return 0.5 * yw.dot(hessian * yw) + linear.dot(yw) + constant;
}

void QuadraticShare::add_gradient(const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
  out.segment(offset, width).noalias() += hessian * y.segment(offset, width);
  out.segment(offset, width) += linear;
}

double QpProblem::value(const Eigen::VectorXd& y) const { return 0.5 * y.dot(omega * y) + c.dot(y) + d; }

Eigen::VectorXd QpProblem::gradient(const Eigen::VectorXd& y) const { return omega * y + c; }

QpProblem build_qp_via_rollout(const PlatoonScenario& scn, const CostWeights& w) {
  scn.validate();
  w.validate(scn.n, scn.horizon);
  const int n = scn.n;
  const int T = scn.horizon;
  const Eigen::Index p = scn.decision_size();
  const double tau = scn.tau;

  auto constant = [p](double v) { return Affine{Eigen::VectorXd::Zero(p), v}; };
  auto input = [&](int vehicle, int step) {
    if (vehicle == 0) return constant(scn.leader.input(step));
    Affine u = constant(0.0);
    u.coef(scn.index(vehicle, step)) = 1.0;
    return u;
  };

  // pos[i][m], vel[i][m]: state of vehicle i at time k+m as an affine map of y.
  std::vector<std::vector<Affine>> pos(static_cast<std::size_t>(n + 1)), vel(static_cast<std::size_t>(n + 1));
  const Eigen::VectorXd p0 = scn.all_positions();
  const Eigen::VectorXd v0 = scn.all_velocities();
  for (int i = 0; i <= n; ++i) {
    auto& pi = pos[static_cast<std::size_t>(i)];
    auto& vi = vel[static_cast<std::size_t>(i)];
    pi.push_back(constant(p0(i)));
    vi.push_back(constant(v0(i)));
    for (int m = 0; m < T; ++m) {
      const Affine u = input(i, m);
      pi.push_back(pi.back() + tau * vi.back() + (0.5 * tau * tau) * u);
      vi.push_back(vi.back() + tau * u);
    }
  }

  QpProblem qp;
  qp.n = n;
  qp.horizon = T;
  for (int i = 1; i <= n; ++i) {
    QuadraticShare share;
    std::tie(share.offset, share.width) = coupling_window(scn, i);
    share.hessian = Eigen::MatrixXd::Zero(share.width, share.width);
    share.linear = Eigen::VectorXd::Zero(share.width);
    const auto iu = static_cast<std::size_t>(i);
    for (int m = 1; m <= T; ++m) {
      const auto mu = static_cast<std::size_t>(m);
      const auto wm = static_cast<std::size_t>(m - 1);
      // [S^{-1} u(k+m-1)]_i = u_i - u_{i-1} (u_1 for the first follower)
      const Affine rel_input = i == 1 ? input(1, m - 1) : input(i, m - 1) - input(i - 1, m - 1);
      accumulate(share, tau * tau * w.input[wm](i - 1), rel_input);
      const Affine ep = pos[iu - 1][mu] - pos[iu][mu] - constant(scn.spacing);
      accumulate(share, w.position[wm](i - 1), ep);
      const Affine ev = vel[iu - 1][mu] - vel[iu][mu];
      accumulate(share, w.velocity[wm](i - 1), ev);
    }
    qp.shares.push_back(std::move(share));
  }

  qp.omega = Eigen::MatrixXd::Zero(p, p);
  qp.c = Eigen::VectorXd::Zero(p);
  for (const auto& s : qp.shares) {
    qp.omega.block(s.offset, s.offset, s.width, s.width) += s.hessian;
    qp.c.segment(s.offset, s.width) += s.linear;
    qp.d += s.constant;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(qp.omega);
  if (llt.info() != Eigen::Success) {
    int worst_m = 0, worst_i = 0;
    for (int m = 0; m < T; ++m) {
      for (int i = 0; i < n; ++i) {
        if (w.input[static_cast<std::size_t>(m)](i) < w.input[static_cast<std::size_t>(worst_m)](worst_i)) {
          worst_m = m;
          worst_i = i;
        }
      }
    }
    throw InvalidParameter("Omega is not positive definite; smallest input weight is weights.input[" +
                           std::to_string(worst_m) + "][" + std::to_string(worst_i) + "]");
  }
  return qp;
}

double mpc_cost(const PlatoonScenario& scn, const CostWeights& w, const Eigen::VectorXd& y) {
  const Trajectory tr = rollout(scn, plan_from_decision(scn, y));
  const auto sm = structure_matrices(scn.n);
  double j1 = 0.0, j2 = 0.0, j3 = 0.0;
  for (int m = 1; m <= scn.horizon; ++m) {
    const auto wm = static_cast<std::size_t>(m - 1);
    const Eigen::VectorXd u = tr.input.col(m - 1).tail(scn.n);
    const Eigen::VectorXd su = sm.S_inv * u;
    j1 += 0.5 * scn.tau * scn.tau * su.dot(w.input[wm].asDiagonal() * su);
    const auto e = error_vectors(scn, tr.position.col(m), tr.velocity.col(m), tr.input.col(m - 1));
    j2 += 0.5 * e.position.dot(w.position[wm].asDiagonal() * e.position);
    j3 += 0.5 * e.velocity.dot(w.velocity[wm].asDiagonal() * e.velocity);
  }
  return j1 + j2 + j3;
}

ClosedFormQp build_lambda_closed_form(const PlatoonScenario& scn, const CostWeights& w) {
  const int n = scn.n;
  const int T = scn.horizon;
  const double tau = scn.tau;
  const auto sm = structure_matrices(n);
  const Eigen::Index p = scn.decision_size();

  ClosedFormQp out;
  out.lambda = Eigen::MatrixXd::Zero(p, p);
  for (int i = 1; i <= T; ++i) {
    for (int j = 1; j <= T; ++j) {
      Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(n, n);
      for (int m = std::max(i, j); m <= T; ++m) {
        const auto wm = static_cast<std::size_t>(m - 1);
        const double cp = std::pow(tau, 4) / 4.0 * (2.0 * (m - i) + 1.0) * (2.0 * (m - j) + 1.0);
        inner += Eigen::MatrixXd(cp * w.position[wm].asDiagonal()) +
                 Eigen::MatrixXd(tau * tau * w.velocity[wm].asDiagonal());
      }
      Eigen::MatrixXd block = sm.S_inv.transpose() * inner * sm.S_inv;
      if (i == j) {
        const auto wi = static_cast<std::size_t>(i - 1);
        block += tau * tau * sm.S_inv.transpose() * w.input[wi].asDiagonal() * sm.S_inv;
      }
      out.lambda.block((i - 1) * n, (j - 1) * n, n, n) = block;
    }
  }

  // E_{ij} = 1 iff i = n k + m and j = T (m - 1) + k + 1 (1-based).
  out.permutation = Eigen::MatrixXd::Zero(p, p);
  for (int k = 0; k < T; ++k) {
    for (int m = 1; m <= n; ++m) out.permutation(n * k + m - 1, T * (m - 1) + k) = 1.0;
  }

  // Linear term from the gamma_m / zeta_m offsets, holding the leader input at its time-k value.
  const Eigen::VectorXd p_all = scn.all_positions();
  const Eigen::VectorXd v_all = scn.all_velocities();
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(n + 1);
  const auto e0 = error_vectors(scn, p_all, v_all, zeros);
  const Eigen::VectorXd lead = sm.S_inv * Eigen::VectorXd::Ones(n) * scn.leader.input(0);
  Eigen::VectorXd time_major = Eigen::VectorXd::Zero(p);
  for (int i = 1; i <= T; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (int m = i; m <= T; ++m) {
      const auto wm = static_cast<std::size_t>(m - 1);
      Eigen::VectorXd gamma = e0.position + m * tau * e0.velocity;
      Eigen::VectorXd zeta = e0.velocity;
      for (int j = 0; j < m; ++j) {
        gamma += tau * tau * (2.0 * (m - j) - 1.0) / 2.0 * lead;
        zeta += tau * tau * lead;
      }
      row += tau * tau / 2.0 * (2.0 * (m - i) + 1.0) * (w.position[wm].asDiagonal() * gamma) +
             tau * (w.velocity[wm].asDiagonal() * zeta);
    }
    time_major.segment((i - 1) * n, n) = -(sm.S_inv.transpose() * row);
  }
  out.linear = out.permutation.transpose() * time_major;
  return out;
}

ClosedFormReport compare_closed_form(const QpProblem& qp, const ClosedFormQp& closed) {
  const Eigen::MatrixXd omega = closed.permutation.transpose() * closed.lambda * closed.permutation;
  ClosedFormReport r;
  r.omega_max_abs_dev = (omega - qp.omega).cwiseAbs().maxCoeff();
  r.omega_max_rel_dev = r.omega_max_abs_dev / std::max(qp.omega.cwiseAbs().maxCoeff(), 1e-300);
  r.linear_max_abs_dev = qp.c.size() ? (closed.linear - qp.c).cwiseAbs().maxCoeff() : 0.0;
  r.linear_max_rel_dev = r.linear_max_abs_dev / std::max(qp.c.cwiseAbs().maxCoeff(), 1e-300);
  return r;
}

void PenaltySpec::validate() const {
  if (sigma < 1) throw InvalidParameter("penalty.sigma must be >= 1, got " + std::to_string(sigma));
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidParameter("penalty.lambda must be positive, got " + std::to_string(lambda));
  }
}

std::pair<double, double> penalty_value_grad(const PenaltySpec& spec, double g) {
  if (!(g > 0.0)) return {0.0, 0.0};
  if (spec.sigma == 1) return {spec.lambda * g, spec.lambda};
  const double lower = std::pow(g, spec.sigma - 1);
  return {spec.lambda * lower * g, spec.lambda * spec.sigma * lower};
}

double penalty_curvature(const PenaltySpec& spec, double g) {
  if (!(g > 0.0) || spec.sigma == 1) return 0.0;
  return spec.lambda * spec.sigma * (spec.sigma - 1) * std::pow(g, spec.sigma - 2);
}

double ScalarConstraint::value(const Eigen::VectorXd& y) const {
  const auto yw = y.segment(offset, width);
  double g = linear.dot(yw) + constant;
  if (curvature != 0.0) {
    const double s = selector.dot(yw);
    g += curvature * s * s;
  }
  return g;
}

void ScalarConstraint::add_gradient(const Eigen::VectorXd& y, double scale, Eigen::VectorXd& out) const {
  auto ow = out.segment(offset, width);
  ow += scale * linear;
  if (curvature != 0.0) ow += (scale * 2.0 * curvature * selector.dot(y.segment(offset, width))) * selector;
}

Eigen::VectorXd box_constraint_values(const PlatoonScenario& scn, int vehicle, const Eigen::VectorXd& block) {
  const int T = scn.horizon;
  if (block.size() != T) throw InvalidParameter("box_constraint_values: block must have T entries");
  const auto& lim = scn.limits;
  const double v0 = scn.velocities(vehicle - 1);
  Eigen::VectorXd g(4 * T);
  double cumulative = 0.0;
  for (int h = 0; h < T; ++h) {
    cumulative += block(h);
    g(h) = block(h) - lim.a_max;
    g(T + h) = lim.a_min - block(h);
    g(2 * T + h) = scn.tau * cumulative - (lim.v_max - v0);
    g(3 * T + h) = (lim.v_min - v0) - scn.tau * cumulative;
  }
  return g;
}

double spacing_constraint_value(const PlatoonScenario& scn, int vehicle, const Eigen::VectorXd& predecessor_block,
                                const Eigen::VectorXd& block, int m) {
  const double tau = scn.tau;
  const double p_prev = vehicle == 1 ? scn.leader.position : scn.positions(vehicle - 2);
  const double v_prev = vehicle == 1 ? scn.leader.velocity : scn.velocities(vehicle - 2);
  const double p_i = scn.positions(vehicle - 1);
  const double v_i = scn.velocities(vehicle - 1);
  const double a_min = scn.limits.a_min;
  const double dv = v_i - scn.limits.v_min;

  double weighted_rel = 0.0;
  double sum_u = 0.0;
  for (int h = 0; h < m; ++h) {
    weighted_rel += (2.0 * (m - h) - 1.0) / 2.0 * (predecessor_block(h) - block(h));
    sum_u += block(h);
  }
  return -(p_prev + m * tau * v_prev - p_i - m * tau * v_i) - tau * tau * weighted_rel + scn.length +
         scn.reaction * v_i + scn.reaction * tau * sum_u -
         1.0 / (2.0 * a_min) * (tau * tau * sum_u * sum_u + 2.0 * tau * dv * sum_u + dv * dv);
}

std::vector<ScalarConstraint> box_constraints(const PlatoonScenario& scn, int vehicle) {
  const int T = scn.horizon;
  const auto& lim = scn.limits;
  const double v0 = scn.velocities(vehicle - 1);
  std::vector<ScalarConstraint> out;
  auto make = [&](Eigen::VectorXd a, double b) {
    ScalarConstraint c;
    c.offset = scn.index(vehicle, 0);
    c.width = T;
    c.linear = std::move(a);
    c.selector = Eigen::VectorXd::Zero(T);
    c.constant = b;
    out.push_back(std::move(c));
  };
  auto unit = [T](int h) { return Eigen::VectorXd::Unit(T, h); };
  auto prefix = [T](int m) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(T);
    s.head(m).setOnes();
    return s;
  };
  for (int h = 0; h < T; ++h) make(unit(h), -lim.a_max);
  for (int h = 0; h < T; ++h) make(-unit(h), lim.a_min);
  for (int h = 0; h < T; ++h) make(scn.tau * prefix(h + 1), -(lim.v_max - v0));
  for (int h = 0; h < T; ++h) make(-scn.tau * prefix(h + 1), lim.v_min - v0);
  return out;
}

std::vector<ScalarConstraint> spacing_constraints(const PlatoonScenario& scn, int vehicle) {
  const int T = scn.horizon;
  const double tau = scn.tau;
  const double a_min = scn.limits.a_min;
  const double p_prev = vehicle == 1 ? scn.leader.position : scn.positions(vehicle - 2);
  const double v_prev = vehicle == 1 ? scn.leader.velocity : scn.velocities(vehicle - 2);
  const double p_i = scn.positions(vehicle - 1);
  const double v_i = scn.velocities(vehicle - 1);
  const double dv = v_i - scn.limits.v_min;
  const auto [offset, width] = coupling_window(scn, vehicle);
  const Eigen::Index own = vehicle == 1 ? 0 : T;  // start of vehicle i's block inside the window

  std::vector<ScalarConstraint> out;
  for (int m = 1; m <= T; ++m) {
    ScalarConstraint c;
    c.offset = offset;
    c.width = width;
    c.linear = Eigen::VectorXd::Zero(width);
    c.selector = Eigen::VectorXd::Zero(width);
    c.curvature = -tau * tau / (2.0 * a_min);
    c.constant = -(p_prev + m * tau * v_prev - p_i - m * tau * v_i) + scn.length + scn.reaction * v_i -
                 dv * dv / (2.0 * a_min);
    for (int h = 0; h < m; ++h) {
      const double coeff = tau * tau * (2.0 * (m - h) - 1.0) / 2.0;
      if (vehicle == 1) {
        c.constant -= coeff * scn.leader.input(h);
      } else {
        c.linear(h) -= coeff;
      }
      c.linear(own + h) += coeff + scn.reaction * tau - tau * dv / a_min;
      c.selector(own + h) = 1.0;
    }
    out.push_back(std::move(c));
  }
  return out;
}

PenalizedObjective::PenalizedObjective(const PlatoonScenario& scn, QpProblem qp, PenaltySpec penalty,
                                       CostSplit split)
    : qp_(std::move(qp)), penalty_(penalty), split_(split) {
  penalty_.validate();
  if (qp_.n != scn.n || qp_.horizon != scn.horizon) throw InvalidParameter("QP does not match scenario");
  if (split_ == CostSplit::per_vehicle) {
    shares_ = qp_.shares;
  } else {
    const double frac = 1.0 / scn.n;
    for (int i = 0; i < scn.n; ++i) {
      shares_.push_back({0, qp_.dimension(), frac * qp_.omega, frac * qp_.c, frac * qp_.d});
    }
  }
  for (int i = 1; i <= scn.n; ++i) {
    auto cs = box_constraints(scn, i);
    auto sp = spacing_constraints(scn, i);
    cs.insert(cs.end(), std::make_move_iterator(sp.begin()), std::make_move_iterator(sp.end()));
    constraints_.push_back(std::move(cs));
  }
}

void PenalizedObjective::check_node(int node) const {
  if (node < 0 || node >= nodes()) {
    throw InvalidParameter("node index " + std::to_string(node) + " out of range [0, " + std::to_string(nodes()) +
                           ")");
  }
}

const std::vector<ScalarConstraint>& PenalizedObjective::constraints(int node) const {
  check_node(node);
  return constraints_[static_cast<std::size_t>(node)];
}

double PenalizedObjective::local_value(int node, const Eigen::VectorXd& x) const {
  check_node(node);
  const auto k = static_cast<std::size_t>(node);
  double f = shares_[k].value(x);
  for (const auto& c : constraints_[k]) f += penalty_value_grad(penalty_, c.value(x)).first;
  return f;
}

void PenalizedObjective::add_local_gradient(int node, const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  check_node(node);
  const auto k = static_cast<std::size_t>(node);
  shares_[k].add_gradient(x, out);
  for (const auto& c : constraints_[k]) {
    const double slope = penalty_value_grad(penalty_, c.value(x)).second;
    if (slope != 0.0) c.add_gradient(x, slope, out);
  }
}

Eigen::VectorXd PenalizedObjective::local_gradient(int node, const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension());
  add_local_gradient(node, x, g);
  return g;
}

double PenalizedObjective::penalty_value(const Eigen::VectorXd& x) const {
  double f = 0.0;
  for (const auto& cs : constraints_) {
    for (const auto& c : cs) f += penalty_value_grad(penalty_, c.value(x)).first;
  }
  return f;
}

double PenalizedObjective::value(const Eigen::VectorXd& x) const { return qp_.value(x) + penalty_value(x); }

Eigen::VectorXd PenalizedObjective::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = qp_.gradient(x);
  for (const auto& cs : constraints_) {
    for (const auto& c : cs) {
      const double slope = penalty_value_grad(penalty_, c.value(x)).second;
      if (slope != 0.0) c.add_gradient(x, slope, g);
    }
  }
  return g;
}

Eigen::MatrixXd PenalizedObjective::hessian(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd h = qp_.omega;
  for (const auto& cs : constraints_) {
    for (const auto& c : cs) {
      const double g = c.value(x);
      const double slope = penalty_value_grad(penalty_, g).second;
      const double curv = penalty_curvature(penalty_, g);
      if (slope == 0.0 && curv == 0.0) continue;
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(dimension());
      c.add_gradient(x, 1.0, grad);
      const auto gw = grad.segment(c.offset, c.width);
      auto hw = h.block(c.offset, c.offset, c.width, c.width);
      hw.noalias() += curv * gw * gw.transpose();
      if (c.curvature != 0.0) hw.noalias() += (2.0 * slope * c.curvature) * c.selector * c.selector.transpose();
    }
  }
  return h;
}

double power_iteration(const Eigen::MatrixXd& a, double tol, int max_iter) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = 1.0 + 0.25 * std::sin(static_cast<double>(k) + 1.0);
  v.normalize();
  double estimate = v.dot(a * v);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(a * v);
    if (std::abs(next - estimate) <= tol * std::abs(next)) return next;
    estimate = next;
  }
  throw NumericalError("power iteration did not converge in " + std::to_string(max_iter) + " iterations");
}

double lipschitz_estimate(const PenalizedObjective& f, double radius) {
  if (!(radius > 0.0)) throw InvalidParameter("lipschitz_estimate: radius must be positive");
  const auto& pen = f.penalty();
  const double sigma = pen.sigma;
  const Eigen::Index p = f.dimension();

  // Penalty Hessian: sum_c phi''(g_c) grad g_c grad g_c' + phi'(g_c) hess g_c over constraints that can be
  // active somewhere on the ball. Stacking the gradients as rows of A + B(x), with A the constant part and
  // B(x) = [2 kappa_c (s_c' x) s_c'], gives lambda_max(sum grad grad') <= (|A|_2 + |B|_2)^2 with
  // |B(x)|_2 <= 2 max|kappa_c| max|s_c| R sqrt(lambda_max(sum s_c s_c')).
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);  // A' A
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd selectors = Eigen::MatrixXd::Zero(p, p);
  double b_coeff = 0.0;
  double outer = 0.0;
  for (int node = 0; node < f.nodes(); ++node) {
    const auto& cs = f.constraints(node);
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const auto& c = cs[k];
      const double a_norm = c.linear.norm();
      const double s_sq = c.selector.squaredNorm();
      const double kappa = c.curvature;
      const double g_max = c.constant + a_norm * radius + std::max(kappa, 0.0) * s_sq * radius * radius;
      if (g_max <= 0.0) continue;
      if (kappa == 0.0) {
        // Of two opposite half-spaces with a nonempty intersection at most one is violated at a time.
        bool shadowed = false;
        for (std::size_t j = 0; j < k && !shadowed; ++j) {
          const auto& o = cs[j];
          shadowed = o.curvature == 0.0 && o.offset == c.offset && o.width == c.width &&
                     (o.linear + c.linear).cwiseAbs().maxCoeff() == 0.0 && o.constant + c.constant <= 0.0;
        }
        if (shadowed) continue;
      }
      const double g_abs = std::max(g_max, std::abs(c.constant) + a_norm * radius + std::abs(kappa) * s_sq * radius * radius);
      if (sigma >= 2) outer = std::max(outer, pen.lambda * sigma * (sigma - 1) * std::pow(g_abs, sigma - 2));
      gram.block(c.offset, c.offset, c.width, c.width).noalias() += c.linear * c.linear.transpose();
      if (kappa != 0.0) {
        b_coeff = std::max(b_coeff, 2.0 * std::abs(kappa) * std::sqrt(s_sq) * radius);
        selectors.block(c.offset, c.offset, c.width, c.width).noalias() += c.selector * c.selector.transpose();
        const double slope = pen.lambda * sigma * std::pow(g_abs, sigma - 1);
        second.block(c.offset, c.offset, c.width, c.width).noalias() +=
            (slope * 2.0 * std::abs(kappa)) * c.selector * c.selector.transpose();
      }
    }
  }
  const double grad_bound = std::sqrt(power_iteration(gram)) + b_coeff * std::sqrt(power_iteration(selectors));
  return power_iteration(f.qp().omega) + outer * grad_bound * grad_bound + power_iteration(second);
}

double default_domain_radius(const PlatoonScenario& scn) {
  return std::sqrt(static_cast<double>(scn.decision_size())) *
         std::max(std::abs(scn.limits.a_min), std::abs(scn.limits.a_max));
}

}  // namespace pgt
