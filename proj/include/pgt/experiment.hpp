#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "pgt/config.hpp"
#include "pgt/gtsolver.hpp"
#include "pgt/oracle.hpp"

namespace pgt {

/// Everything derived from a config before any solver runs.
struct Setup {
  QpProblem qp;
  PenalizedObjective objective;
  CommGraph graph;
  LaplacianSpectrum spectrum;
  double radius = 0.0;  // ball used for eta
  double eta = 0.0;
  double alpha = 0.0;   // configured value or |lambda_2| / eta
};

Setup prepare(const ExperimentConfig& cfg);

/// Closed-form minimizer as a warm start, then penalized descent.
OracleResult solve_oracle(const PenalizedObjective& f);

/// gap / max(1, |f_star|)
double relative_gap(double gap, double f_star);

struct VariantResult {
  std::string name;
  QuantizerSpec quantizer;
  std::vector<IterTrace> trace;
  double wall_seconds = 0.0;
  double worst_x_conservation = 0.0;
  double worst_z_conservation = 0.0;
  double worst_tracking = 0.0;
};

struct RunReport {
  nlohmann::json config;  // full snapshot, loadable with parse_config
  OracleResult oracle;
  double lambda2_abs = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  std::vector<VariantResult> variants;
};

/// Builds the QP and oracle once, then runs each variant. Module errors are
/// rethrown with the failing variant's name prepended.
RunReport run_experiment(const ExperimentConfig& cfg);

/// Per-variant trace_<name>.csv, summary.json and, if requested, plot.svg.
/// Returns the written paths. Throws IoError with the offending path.
std::vector<std::filesystem::path> write_outputs(const RunReport& report, const std::filesystem::path& dir,
                                                 bool plot = true);

/// CSV text of one trace: header iter,cost,gap,consensus_residual,tracking_residual.
std::string trace_csv(const std::vector<IterTrace>& trace);

nlohmann::json summary_json(const RunReport& report);

}  // namespace pgt
