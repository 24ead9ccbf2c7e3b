#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "pgt/errors.hpp"
#include "pgt/mpcqp.hpp"
#include "support.hpp"

using namespace pgt;
using pgt::testing::central_difference;
using pgt::testing::random_scenario;
using pgt::testing::random_vector;
using pgt::testing::random_weights;
using pgt::testing::rel_err;

namespace {

PlatoonScenario single_vehicle(int horizon, double tau) {
  PlatoonScenario s;
  s.n = 1;
  s.horizon = horizon;
  s.tau = tau;
  s.spacing = 20.0;
  s.leader.position = 20.0;
  s.leader.velocity = 0.0;
  s.leader.input = Eigen::VectorXd::Zero(horizon);
  s.positions = Eigen::VectorXd::Zero(1);
  s.velocities = Eigen::VectorXd::Zero(1);
  return s;
}

// Steady platoon: gaps exactly delta, common speed, leader coasting.
PlatoonScenario steady(int n, int horizon) {
  PlatoonScenario s;
  s.n = n;
  s.horizon = horizon;
  s.tau = 0.1;
  s.spacing = 30.0;
  s.leader.velocity = 10.0;
  s.leader.input = Eigen::VectorXd::Zero(horizon);
  s.positions.resize(n);
  s.velocities = Eigen::VectorXd::Constant(n, 10.0);
  for (int i = 0; i < n; ++i) s.positions(i) = -30.0 * (i + 1);
  return s;
}

}  // namespace

TEST_CASE("CostWeights validation names the entry") {
  auto w = CostWeights::constant(2, 2, 1.0, 1.0, 1.0);
  CHECK_NOTHROW(w.validate(2, 2));
  w.input[1](0) = 0.0;
  try {
    w.validate(2, 2);
    FAIL("expected an exception");
  } catch (const InvalidParameter& e) {
    CHECK(std::string(e.what()).find("weights.input[1][0]") != std::string::npos);
  }
  auto neg = CostWeights::constant(2, 2, 1.0, 1.0, 1.0);
  neg.velocity[0](1) = -1.0;
  CHECK_THROWS_AS(neg.validate(2, 2), InvalidParameter);
  CHECK_THROWS_AS(CostWeights::constant(2, 2, 1, 1, 1).validate(3, 2), InvalidParameter);
}

TEST_CASE("scalar input-only cost gives the identity") {
  const auto s = single_vehicle(3, 1.0);
  const auto qp = build_qp_via_rollout(s, CostWeights::constant(1, 3, 1.0, 0.0, 0.0));
  CHECK((qp.omega - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(qp.c.cwiseAbs().maxCoeff() == 0.0);
  CHECK(qp.d == 0.0);
}

TEST_CASE("zero initial errors and coasting leader give a pure quadratic") {
  const auto s = steady(3, 4);
  std::mt19937_64 rng(2);
  const auto qp = build_qp_via_rollout(s, random_weights(rng, 3, 4));
  CHECK(qp.c.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(qp.d) <= 1e-12);
}

TEST_CASE("property: quadratic form equals rollout cost") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4, T = 1 + (trial / 4) % 4;
    const auto s = random_scenario(rng, n, T);
    const auto w = random_weights(rng, n, T);
    const auto qp = build_qp_via_rollout(s, w);
    CHECK((qp.omega - qp.omega.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * qp.omega.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(qp.omega, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd y = random_vector(rng, qp.dimension(), 3.0);
      const double direct = mpc_cost(s, w, y);
      CHECK(std::abs(qp.value(y) - direct) <= 1e-8 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST_CASE("per-vehicle shares sum to the full quadratic") {
  std::mt19937_64 rng(4);
  const auto s = random_scenario(rng, 4, 3);
  const auto qp = build_qp_via_rollout(s, random_weights(rng, 4, 3));
  REQUIRE(qp.shares.size() == 4);
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd y = random_vector(rng, qp.dimension(), 2.0);
    double sum = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(qp.dimension());
    for (const auto& sh : qp.shares) {
      sum += sh.value(y);
      sh.add_gradient(y, grad);
    }
    CHECK(rel_err(sum, qp.value(y)) <= 1e-10);
    CHECK((grad - qp.gradient(y)).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, grad.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("closed form for a single block") {
  auto s = single_vehicle(1, 0.3);
  const auto w = CostWeights::constant(1, 1, 1.7, 0.8, 2.5);
  const auto closed = build_lambda_closed_form(s, w);
  const double tau = s.tau;
  const double expected = std::pow(tau, 4) / 4 * 0.8 + tau * tau * 2.5 + tau * tau * 1.7;
  CHECK(closed.lambda(0, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(closed.permutation(0, 0) == 1.0);
  const auto qp = build_qp_via_rollout(s, w);
  const auto rep = compare_closed_form(qp, closed);
  CHECK(rep.omega_max_abs_dev <= 1e-12);
}

TEST_CASE("closed-form permutation and cross-check report") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3, T = 2 + trial % 2;
    const auto s = random_scenario(rng, n, T);
    const auto w = random_weights(rng, n, T);
    const auto closed = build_lambda_closed_form(s, w);
    const Eigen::MatrixXd& e = closed.permutation;
    CHECK((e.rowwise().sum().array() == 1.0).all());
    CHECK((e.colwise().sum().array() == 1.0).all());
    CHECK(((e.array() == 0.0) || (e.array() == 1.0)).all());
    const auto rep = compare_closed_form(build_qp_via_rollout(s, w), closed);
    CHECK(rep.omega_max_rel_dev <= 1e-12);
    CHECK(std::isfinite(rep.linear_max_abs_dev));
    // the gamma/zeta offsets agree with the rollout once the leader stops accelerating
    auto still = s;
    still.leader.input.setZero();
    CHECK(compare_closed_form(build_qp_via_rollout(still, w), build_lambda_closed_form(still, w)).linear_max_rel_dev <=
          1e-12);
    MESSAGE("n=" << n << " T=" << T << " omega dev " << rep.omega_max_abs_dev << " linear dev "
                 << rep.linear_max_abs_dev);
  }
}

TEST_CASE("penalty arithmetic") {
  const PenaltySpec sq{2, 1.0};
  CHECK(penalty_value_grad(sq, -0.5) == std::pair{0.0, 0.0});
  auto [v, d] = penalty_value_grad(sq, 0.3);
  CHECK(v == doctest::Approx(0.09));
  CHECK(d == doctest::Approx(0.6));
  auto [v1, d1] = penalty_value_grad({1, 2.0}, 1.0);
  CHECK(v1 == doctest::Approx(2.0));
  CHECK(d1 == doctest::Approx(2.0));
  CHECK_THROWS_AS(PenaltySpec({0, 1.0}).validate(), InvalidParameter);
  CHECK_THROWS_AS(PenaltySpec({2, 0.0}).validate(), InvalidParameter);
}

TEST_CASE("sigma=2 penalty derivative is continuous at the boundary") {
  const PenaltySpec sq{2, 1.0};
  CHECK(penalty_value_grad(sq, 0.0).second == 0.0);
  const double delta = 1e-7;
  const double jump = penalty_value_grad(sq, delta).second - penalty_value_grad(sq, -delta).second;
  CHECK(jump == doctest::Approx(2.0 * delta));
}

TEST_CASE("box residuals") {
  auto s = steady(2, 4);
  const Eigen::VectorXd at_max = Eigen::VectorXd::Constant(4, s.limits.a_max);
  const Eigen::VectorXd g = box_constraint_values(s, 1, at_max);
  CHECK(g.head(4).cwiseAbs().maxCoeff() == 0.0);
  CHECK(box_constraint_values(s, 2, Eigen::VectorXd::Zero(4)).maxCoeff() < 0.0);

  s.velocities(0) = s.limits.v_max - 0.05;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
  u(0) = 1.0;
  const Eigen::VectorXd h = box_constraint_values(s, 1, u);
  CHECK(h(2 * 4) == doctest::Approx(0.05));
  CHECK_THROWS_AS(box_constraint_values(s, 1, Eigen::VectorXd::Zero(3)), InvalidParameter);
}

TEST_CASE("spacing residual on the boundary and with slack") {
  PlatoonScenario s = steady(2, 3);
  const double need = required_gap(s, 10.0);
  s.spacing = need;
  s.positions << -need, -2 * need;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  for (int m = 1; m <= 3; ++m) {
    CHECK(std::abs(spacing_constraint_value(s, 1, zero, zero, m)) <= 1e-12);
    CHECK(std::abs(spacing_constraint_value(s, 2, zero, zero, m)) <= 1e-12);
  }
  s.positions << -(need + 10.0), -(2 * need + 20.0);
  for (int m = 1; m <= 3; ++m) {
    CHECK(spacing_constraint_value(s, 1, zero, zero, m) == doctest::Approx(-10.0));
    CHECK(spacing_constraint_value(s, 2, zero, zero, m) == doctest::Approx(-10.0));
  }
}

TEST_CASE("property: spacing residual matches a rolled-out safe-gap evaluation") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4, T = 1 + trial % 5;
    const auto s = random_scenario(rng, n, T);
    Eigen::MatrixXd plan(n, T);
    for (Eigen::Index k = 0; k < plan.size(); ++k) plan.data()[k] = pgt::testing::uniform(rng, -3, 3);
    const Trajectory tr = rollout(s, plan);
    for (int i = 1; i <= n; ++i) {
      const Eigen::VectorXd prev = tr.input.row(i - 1).transpose();
      const Eigen::VectorXd own = tr.input.row(i).transpose();
      for (int m = 1; m <= T; ++m) {
        const double gap = tr.position(i - 1, m) - tr.position(i, m);
        const double expected = required_gap(s, tr.velocity(i, m)) - gap;
        CHECK(spacing_constraint_value(s, i, prev, own, m) == doctest::Approx(expected).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("constraint objects agree with the direct evaluators") {
  std::mt19937_64 rng(21);
  const auto s = random_scenario(rng, 3, 4);
  const Eigen::VectorXd y = random_vector(rng, s.decision_size(), 3.0);
  const Eigen::MatrixXd plan = plan_from_decision(s, y);
  for (int i = 1; i <= 3; ++i) {
    const auto box = box_constraints(s, i);
    const Eigen::VectorXd direct = box_constraint_values(s, i, plan.row(i - 1).transpose());
    REQUIRE(static_cast<Eigen::Index>(box.size()) == direct.size());
    for (std::size_t k = 0; k < box.size(); ++k) CHECK(box[k].value(y) == doctest::Approx(direct(static_cast<Eigen::Index>(k))));
    const auto sp = spacing_constraints(s, i);
    REQUIRE(sp.size() == 4);
    const Eigen::VectorXd prev = i == 1 ? Eigen::VectorXd(s.leader.input) : Eigen::VectorXd(plan.row(i - 2).transpose());
    for (int m = 1; m <= 4; ++m) {
      CHECK(sp[static_cast<std::size_t>(m - 1)].value(y) ==
            doctest::Approx(spacing_constraint_value(s, i, prev, plan.row(i - 1).transpose(), m)));
    }
  }
}

TEST_CASE("local objectives decompose the penalized objective") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4, T = 1 + trial % 4;
    const auto s = random_scenario(rng, n, T);
    const PenalizedObjective f(s, build_qp_via_rollout(s, random_weights(rng, n, T)), {2, 1.0});
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd x = random_vector(rng, f.dimension(), 4.0);
      double sum = 0.0;
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(f.dimension());
      for (int i = 0; i < n; ++i) {
        sum += f.local_value(i, x);
        grad += f.local_gradient(i, x);
      }
      CHECK(rel_err(sum, f.value(x)) <= 1e-10);
      CHECK(rel_err(f.value(x), f.qp().value(x) + f.penalty_value(x)) <= 1e-10);
      CHECK((grad - f.gradient(x)).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, grad.cwiseAbs().maxCoeff()));
    }
  }
  const auto s = steady(2, 2);
  const PenalizedObjective f(s, build_qp_via_rollout(s, CostWeights::constant(2, 2, 1, 1, 1)), {});
  CHECK_THROWS_AS(f.local_value(2, Eigen::VectorXd::Zero(4)), InvalidParameter);
  CHECK_THROWS_AS(f.local_gradient(-1, Eigen::VectorXd::Zero(4)), InvalidParameter);
}

TEST_CASE("feasible point leaves only the quadratic share") {
  const auto s = steady(3, 3);
  const auto qp = build_qp_via_rollout(s, CostWeights::constant(3, 3, 1.0, 0.5, 0.5));
  const PenalizedObjective f(s, qp, {2, 1.0});
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(f.dimension(), 0.1);
  CHECK(f.penalty_value(x) == 0.0);
  for (int i = 0; i < 3; ++i) CHECK(f.local_value(i, x) == doctest::Approx(qp.shares[static_cast<std::size_t>(i)].value(x)));
}

TEST_CASE("uniform split shares J/n") {
  std::mt19937_64 rng(6);
  const auto s = random_scenario(rng, 3, 2);
  const PenalizedObjective a(s, build_qp_via_rollout(s, random_weights(rng, 3, 2)), {2, 1.0}, CostSplit::uniform);
  const Eigen::VectorXd x = random_vector(rng, a.dimension(), 1.0);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += a.local_value(i, x);
  CHECK(rel_err(sum, a.value(x)) <= 1e-10);
}

TEST_CASE("property: analytic gradients match central differences") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial % 3, T = 2 + trial % 3;
    const auto s = random_scenario(rng, n, T);
    const PenalizedObjective f(s, build_qp_via_rollout(s, random_weights(rng, n, T)), {2, 1.0});
    int active_points = 0;
    for (int k = 0; k < 20; ++k) {
      // alternate interior points and points far outside the input box
      const double scale = k % 2 ? 6.0 : 0.2;
      const Eigen::VectorXd x = random_vector(rng, f.dimension(), scale);
      if (f.penalty_value(x) > 0.0) ++active_points;
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd g = f.local_gradient(i, x);
        const Eigen::VectorXd fd = central_difference(f, i, x);
        CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, g.cwiseAbs().maxCoeff()));
      }
    }
    CHECK(active_points >= 5);
  }
}

TEST_CASE("power iteration and Lipschitz estimate") {
  CHECK(power_iteration(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(1.0));
  const Eigen::Matrix2d d = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  CHECK(power_iteration(d) == doctest::Approx(4.0).epsilon(1e-8));

  // tiny ball around a strictly feasible start: no penalty can switch on
  auto s = single_vehicle(2, 1.0);
  CostWeights w = CostWeights::constant(1, 2, 1.0, 0.0, 0.0);
  w.input[1](0) = 4.0;
  const PenalizedObjective f(s, build_qp_via_rollout(s, w), {2, 1.0});
  CHECK(lipschitz_estimate(f, 1e-3) == doctest::Approx(4.0).epsilon(1e-8));
  auto s1 = single_vehicle(2, 1.0);
  const PenalizedObjective id(s1, build_qp_via_rollout(s1, CostWeights::constant(1, 2, 1.0, 0.0, 0.0)), {2, 1.0});
  CHECK(lipschitz_estimate(id, 1e-3) == doctest::Approx(1.0));
  CHECK_THROWS_AS(lipschitz_estimate(id, 0.0), InvalidParameter);
}

TEST_CASE("property: Lipschitz estimate bounds the Hessian norm on the ball") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    const auto s = random_scenario(rng, 3, 3);
    const PenalizedObjective f(s, build_qp_via_rollout(s, random_weights(rng, 3, 3)), {2, 1.0});
    const double radius = default_domain_radius(s);
    const double eta = lipschitz_estimate(f, radius);
    CHECK(std::isfinite(eta));
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd x = random_vector(rng, f.dimension(), 1.0);
      x *= pgt::testing::uniform(rng, 0.0, radius) / x.norm();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.hessian(x), Eigen::EigenvaluesOnly);
      CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() <= eta);
    }
  }
}
