#include "pgt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pgt/errors.hpp"

namespace pgt {

namespace {

Setup make_setup(const ExperimentConfig& cfg) {
  QpProblem qp = build_qp_via_rollout(cfg.scenario, cfg.weights);
  PenalizedObjective objective(cfg.scenario, qp, cfg.penalty, cfg.split);
  CommGraph graph = cfg.graph.build();
  LaplacianSpectrum spec = spectrum(graph);
  const double radius = cfg.solver.domain_radius.value_or(default_domain_radius(cfg.scenario));
  const double eta = lipschitz_estimate(objective, radius);
  const double alpha = cfg.solver.alpha.value_or(step_bound(spec.lambda2_abs, eta));
  return Setup{std::move(qp), std::move(objective), std::move(graph), std::move(spec), radius, eta, alpha};
}

template <typename E>
[[noreturn]] void retag(const E& e, const std::string& tag) {
  throw E(tag + ": " + e.what());
}

}  // namespace

Setup prepare(const ExperimentConfig& cfg) { return make_setup(cfg); }

OracleResult solve_oracle(const PenalizedObjective& f) {
  const OracleResult start = solve_unconstrained(f.qp());
  OracleResult r = solve_penalized(f, start.y_star);
  r.condition_estimate = start.condition_estimate;
  r.ill_conditioned = start.ill_conditioned;
  return r;
}

double relative_gap(double gap, double f_star) { return gap / std::max(1.0, std::abs(f_star)); }

RunReport run_experiment(const ExperimentConfig& cfg) {
  const Setup setup = prepare(cfg);
  RunReport report;
  report.config = to_json(cfg);
  report.oracle = solve_oracle(setup.objective);
  report.lambda2_abs = setup.spectrum.lambda2_abs;
  report.eta = setup.eta;
  report.alpha = setup.alpha;

  for (const QuantizerSpec& q : cfg.variants()) {
    SolverConfig sc = cfg.solver.base;
    sc.alpha = setup.alpha;
    sc.quantizer = q;
    VariantResult v;
    v.name = variant_name(q);
    v.quantizer = q;
    const std::string tag = "variant " + v.name;
    const auto t0 = std::chrono::steady_clock::now();
    RunResult r;
    try {
      r = run(setup.graph, setup.objective, sc, report.oracle.f_star);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.iteration(), e.norm(), tag);
    } catch (const InvalidParameter& e) {
      retag(e, tag);
    } catch (const NumericalError& e) {
      retag(e, tag);
    } catch (const InconsistencyError& e) {
      retag(e, tag);
    }
    v.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.trace = std::move(r.trace);
    v.worst_x_conservation = r.worst_x_conservation;
    v.worst_z_conservation = r.worst_z_conservation;
    v.worst_tracking = r.worst_tracking;
    report.variants.push_back(std::move(v));
  }
  return report;
}

}  // namespace pgt
