// pgt: build, solve and sweep quantized gradient-tracking platoon MPC experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "json.hpp"

#include "pgt/config.hpp"
#include "pgt/errors.hpp"
#include "pgt/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kDivergence = 3, kIo = 4 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<long long> iters;
  std::optional<std::string> alpha;
  std::optional<std::string> quantizer;
  std::optional<double> rho;
  std::optional<std::string> out;
};

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pgt::IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return pgt::parse_json_text(buf.str(), path.string());
}

pgt::ExperimentConfig load(const fs::path& path, const Overrides& o) {
  json j = read_json(path);
  if (j.contains("solver") && !j["solver"].is_object()) return pgt::parse_config(j);  // reports the type error
  json& solver = j["solver"];
  if (o.seed) solver["seed"] = *o.seed;
  if (o.iters) solver["iters"] = *o.iters;
  if (o.alpha) {
    if (*o.alpha == "auto") {
      solver["alpha"] = "auto";
    } else {
      double a = 0.0;
      try {
        std::size_t used = 0;
        a = std::stod(*o.alpha, &used);
        if (used != o.alpha->size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw pgt::ConfigError("--alpha: expected a number or \"auto\", got \"" + *o.alpha + "\"");
      }
      solver["alpha"] = a;
    }
  }
  if (o.quantizer) solver["quantizer"] = *o.quantizer;
  if (o.rho) solver["rho"] = *o.rho;
  if (o.out) j["output"] = *o.out;
  return pgt::parse_config(j);
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json oracle_json(const pgt::OracleResult& r) {
  return {{"f_star", r.f_star},
          {"method", std::string(pgt::to_string(r.method))},
          {"grad_norm_at_solution", r.grad_norm_at_solution},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"condition_estimate", r.condition_estimate},
          {"ill_conditioned", r.ill_conditioned}};
}

int cmd_build_qp(const pgt::ExperimentConfig& cfg) {
  const pgt::Setup s = pgt::prepare(cfg);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.qp.omega, Eigen::EigenvaluesOnly);
  const auto closed = pgt::build_lambda_closed_form(cfg.scenario, cfg.weights);
  const auto cmp = pgt::compare_closed_form(s.qp, closed);
  std::size_t constraints = 0;
  for (int i = 0; i < s.objective.nodes(); ++i) constraints += s.objective.constraints(i).size();
  print_json({
      {"dimension", s.qp.dimension()},
      {"omega_eigen_min", eig.eigenvalues().minCoeff()},
      {"omega_eigen_max", eig.eigenvalues().maxCoeff()},
      {"c_norm", s.qp.c.norm()},
      {"d", s.qp.d},
      {"penalty_terms", constraints},
      {"closed_form_check",
       {{"omega_max_abs_dev", cmp.omega_max_abs_dev},
        {"omega_max_rel_dev", cmp.omega_max_rel_dev},
        {"linear_max_abs_dev", cmp.linear_max_abs_dev},
        {"linear_max_rel_dev", cmp.linear_max_rel_dev}}},
      {"lambda2_abs", s.spectrum.lambda2_abs},
      {"domain_radius", s.radius},
      {"eta", s.eta},
      {"alpha", s.alpha},
  });
  return kOk;
}

int cmd_oracle(const pgt::ExperimentConfig& cfg) {
  const pgt::Setup s = pgt::prepare(cfg);
  print_json(oracle_json(pgt::solve_oracle(s.objective)));
  return kOk;
}

int cmd_run(pgt::ExperimentConfig cfg, bool single, bool plot) {
  if (single) cfg.sweep.clear();
  const pgt::RunReport report = pgt::run_experiment(cfg);
  const auto files = pgt::write_outputs(report, cfg.output, plot);
  for (const auto& v : report.variants) {
    const auto& last = v.trace.back();
    std::printf("%-16s iters %zu  cost %.10g  rel gap %.3e  consensus %.3e  (%.2fs)\n", v.name.c_str(),
                v.trace.size(), last.cost, pgt::relative_gap(last.gap, report.oracle.f_star),
                last.consensus_residual, v.wall_seconds);
  }
  for (const auto& f : files) std::printf("wrote %s\n", f.string().c_str());
  return kOk;
}

int cmd_preset(const std::string& name, const std::string& out) {
  const json j = pgt::preset_config(name);
  (void)pgt::parse_config(j);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw pgt::IoError("cannot create " + out + ": " + ec.message());
  const fs::path path = fs::path(out) / (name + ".json");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw pgt::IoError("cannot open " + path.string() + " for writing");
  f << j.dump(2) << "\n";
  f.close();
  if (!f) throw pgt::IoError("failed writing " + path.string());
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized gradient-tracking solver for platoon MPC"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;
  bool no_plot = false;

  const auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", o.seed, "initial-state seed");
    sub->add_option("--iters", o.iters, "iteration count");
    sub->add_option("--alpha", o.alpha, "step rate or \"auto\"");
    sub->add_option("--quantizer", o.quantizer, "none | log | uniform");
    sub->add_option("--rho", o.rho, "quantization level");
    sub->add_option("--out", o.out, "output directory");
  };

  auto* build_qp = app.add_subcommand("build-qp", "QP statistics and closed-form cross-check");
  add_overrides(build_qp);
  auto* solve = app.add_subcommand("solve", "run one variant (solver.quantizer, sweep ignored)");
  add_overrides(solve);
  solve->add_flag("--no-plot", no_plot, "skip plot.svg");
  auto* sweep = app.add_subcommand("sweep", "run every sweep variant");
  add_overrides(sweep);
  sweep->add_flag("--no-plot", no_plot, "skip plot.svg");
  auto* oracle = app.add_subcommand("oracle", "centralized baseline only");
  add_overrides(oracle);

  std::string preset_name, preset_out = ".";
  auto* preset = app.add_subcommand("preset", "write a preset config");
  preset->add_option("name", preset_name, "paper-fig2 | paper-fig3")->required();
  preset->add_option("--out", preset_out, "directory for <name>.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*preset) return cmd_preset(preset_name, preset_out);
    const pgt::ExperimentConfig cfg = load(config_path, o);
    if (*build_qp) return cmd_build_qp(cfg);
    if (*oracle) return cmd_oracle(cfg);
    if (*solve) return cmd_run(cfg, true, !no_plot);
    return cmd_run(cfg, false, !no_plot);
  } catch (const pgt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const pgt::InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const pgt::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const pgt::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
