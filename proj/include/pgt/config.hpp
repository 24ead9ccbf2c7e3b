#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "pgt/gtsolver.hpp"
#include "pgt/mpcqp.hpp"
#include "pgt/netgraph.hpp"
#include "pgt/platoon.hpp"
#include "pgt/quantize.hpp"

namespace pgt {

struct GraphConfig {
  std::string topology = "cycle";  // "cycle" or "custom"
  int n = 0;
  double weight = 1.0;
  std::vector<std::tuple<int, int, double>> edges;  // (i, j, w_ij), 0-based, custom only

  CommGraph build() const;
};

struct SolverSettings {
  std::optional<double> alpha;  // nullopt selects |lambda_2| / eta
  std::optional<double> domain_radius;  // ball used for eta; nullopt selects the input-box radius
  SolverConfig base;  // alpha is filled in per experiment
};

struct ExperimentConfig {
  PlatoonScenario scenario;
  GraphConfig graph;
  CostWeights weights;
  PenaltySpec penalty;
  CostSplit split = CostSplit::per_vehicle;
  SolverSettings solver;
  std::vector<QuantizerSpec> sweep;  // empty runs solver.base.quantizer alone
  std::string output = "out";

  /// Variants actually executed.
  std::vector<QuantizerSpec> variants() const;
};

/// Parses and validates. Errors throw ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);

/// JSON syntax check; errors throw ConfigError with line, column and the offending line.
nlohmann::json parse_json_text(std::string_view text, std::string_view source = "<config>");

/// Reads a JSON file. Parse errors carry line and column.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig load_config_text(std::string_view text, std::string_view source = "<config>");

/// Every field written out explicitly; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// "none", "log_0.125", "uniform_0.0625"
std::string variant_name(const QuantizerSpec& q);

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
nlohmann::json preset_config(std::string_view name);

}  // namespace pgt
