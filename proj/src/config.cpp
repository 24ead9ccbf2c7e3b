#include "pgt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>

#include "pgt/errors.hpp"

namespace pgt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& rule) { throw ConfigError(field + ": " + rule); }

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

/// Typed access to one JSON object with field paths for error messages.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "must be an object");
  }

  const std::string& path() const { return path_; }
  std::string field(std::string_view key) const { return join(path_, key); }
  bool has(std::string_view key) const { return j_.contains(key); }
  const json& at(std::string_view key) const {
    if (!has(key)) fail(field(key), "required field missing");
    return j_.at(key);
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) fail(field(it.key()), "unknown field");
    }
  }

  double number(std::string_view key) const { return as_number(at(key), field(key)); }
  double number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(field(key), "must be an integer");
    return v.get<long long>();
  }
  long long integer_or(std::string_view key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  std::string string(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_string()) fail(field(key), "must be a string");
    return v.get<std::string>();
  }
  std::string string_or(std::string_view key, std::string fallback) const {
    return has(key) ? string(key) : std::move(fallback);
  }

  Section child(std::string_view key) const { return Section(at(key), field(key)); }

  static double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) fail(field, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, "must be finite");
    return x;
  }

 private:
  const json& j_;
  std::string path_;
};

Eigen::VectorXd number_array(const json& v, const std::string& field, Eigen::Index expected) {
  if (!v.is_array()) fail(field, "must be an array");
  if (static_cast<Eigen::Index>(v.size()) != expected) {
    fail(field, "must have " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  }
  Eigen::VectorXd out(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    out(i) = Section::as_number(v[static_cast<std::size_t>(i)], indexed(field, static_cast<std::size_t>(i)));
  }
  return out;
}

/// Scalar (broadcast) or an array of `expected` numbers.
Eigen::VectorXd broadcast(const json& v, const std::string& field, Eigen::Index expected) {
  if (v.is_number()) return Eigen::VectorXd::Constant(expected, Section::as_number(v, field));
  return number_array(v, field, expected);
}

/// Scalar, T scalars, or T arrays of n.
std::vector<Eigen::VectorXd> weight_table(const json& v, const std::string& field, int n, int horizon) {
  std::vector<Eigen::VectorXd> out;
  if (v.is_number()) {
    out.assign(static_cast<std::size_t>(horizon), broadcast(v, field, n));
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != horizon) {
    fail(field, "must be a number or an array of " + std::to_string(horizon) + " per-step entries");
  }
  for (std::size_t m = 0; m < v.size(); ++m) out.push_back(broadcast(v[m], indexed(field, m), n));
  return out;
}

template <typename F>
void wrap_invalid(const std::string& field, F&& f) {
  try {
    f();
  } catch (const InvalidParameter& e) {
    fail(field, e.what());
  } catch (const ConnectivityError& e) {
    fail(field, e.what());
  }
}

QuantizerSpec parse_quantizer(const Section& s) {
  QuantizerSpec q;
  const std::string kind = s.string_or("quantizer", "none");
  const auto parsed = parse_quantizer_kind(kind);
  if (!parsed) fail(s.field("quantizer"), "must be one of none, log, uniform (got \"" + kind + "\")");
  q.kind = *parsed;
  if (q.kind != QuantizerKind::none) {
    q.level = s.number("rho");
    if (!(q.level > 0.0)) fail(s.field("rho"), "must be positive");
  } else if (s.has("rho")) {
    q.level = s.number("rho");
    if (q.level < 0.0) fail(s.field("rho"), "must be nonnegative");
  }
  return q;
}

void parse_scenario(const Section& s, PlatoonScenario& scn) {
  s.allow({"n", "tau", "T", "delta", "l", "eps", "limits", "leader", "init"});
  const long long n = s.integer("n");
  if (n < 1 || n > 100000) fail(s.field("n"), "must be a positive vehicle count");
  const long long horizon = s.integer("T");
  if (horizon < 1 || horizon > 100000) fail(s.field("T"), "must be >= 1");
  scn.n = static_cast<int>(n);
  scn.horizon = static_cast<int>(horizon);
  scn.tau = s.number("tau");
  if (!(scn.tau > 0.0)) fail(s.field("tau"), "must be positive");
  scn.spacing = s.number_or("delta", scn.spacing);
  scn.length = s.number_or("l", scn.length);
  if (!(scn.length > 0.0)) fail(s.field("l"), "must be positive");
  scn.reaction = s.number_or("eps", scn.reaction);
  if (scn.reaction < 0.0) fail(s.field("eps"), "must be nonnegative");

  if (s.has("limits")) {
    const Section lim = s.child("limits");
    lim.allow({"v_min", "v_max", "a_min", "a_max"});
    scn.limits.v_min = lim.number_or("v_min", scn.limits.v_min);
    scn.limits.v_max = lim.number_or("v_max", scn.limits.v_max);
    scn.limits.a_min = lim.number_or("a_min", scn.limits.a_min);
    scn.limits.a_max = lim.number_or("a_max", scn.limits.a_max);
    if (!(scn.limits.v_min < scn.limits.v_max)) fail(lim.field("v_max"), "must exceed v_min");
    if (!(scn.limits.a_min < 0.0)) fail(lim.field("a_min"), "must be negative");
    if (!(scn.limits.a_max > 0.0)) fail(lim.field("a_max"), "must be positive");
  }

  scn.leader.input = Eigen::VectorXd::Zero(scn.horizon);
  if (s.has("leader")) {
    const Section lead = s.child("leader");
    lead.allow({"p0", "v0", "u0"});
    scn.leader.position = lead.number_or("p0", 0.0);
    scn.leader.velocity = lead.number_or("v0", 0.0);
    if (lead.has("u0")) scn.leader.input = broadcast(lead.at("u0"), lead.field("u0"), scn.horizon);
  }

  const Section init = s.child("init");
  init.allow({"positions", "velocities"});
  scn.positions = number_array(init.at("positions"), init.field("positions"), scn.n);
  scn.velocities = number_array(init.at("velocities"), init.field("velocities"), scn.n);

  wrap_invalid(s.path(), [&] { scn.validate(); });
}

void parse_graph(const Section& s, GraphConfig& g, int n) {
  s.allow({"topology", "n", "weight", "edges"});
  g.topology = s.string_or("topology", "cycle");
  if (g.topology == "cycle") {
    g.n = static_cast<int>(s.integer_or("n", n));
    g.weight = s.number_or("weight", 1.0);
    if (!(g.weight > 0.0)) fail(s.field("weight"), "must be positive");
    if (s.has("edges")) fail(s.field("edges"), "only allowed with topology \"custom\"");
  } else if (g.topology == "custom") {
    g.n = static_cast<int>(s.integer_or("n", n));
    const json& edges = s.at("edges");
    const std::string field = s.field("edges");
    if (!edges.is_array() || edges.empty()) fail(field, "must be a nonempty array of [i, j, w]");
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const json& e = edges[k];
      const std::string ef = indexed(field, k);
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
        fail(ef, "must be [i, j, w] with integer node indices");
      }
      g.edges.emplace_back(e[0].get<int>(), e[1].get<int>(), Section::as_number(e[2], indexed(ef, 2)));
    }
  } else {
    fail(s.field("topology"), "must be \"cycle\" or \"custom\" (got \"" + g.topology + "\")");
  }
  if (g.n != n) fail(s.field("n"), "must equal scenario.n = " + std::to_string(n));
  wrap_invalid(s.path(), [&] { (void)g.build(); });
}

void parse_weights(const Section& s, CostWeights& w, int n, int horizon) {
  s.allow({"input", "position", "velocity"});
  const auto table = [&](std::string_view key) {
    return s.has(key) ? weight_table(s.at(key), s.field(key), n, horizon)
                      : std::vector<Eigen::VectorXd>(static_cast<std::size_t>(horizon), Eigen::VectorXd::Ones(n));
  };
  w.input = table("input");
  w.position = table("position");
  w.velocity = table("velocity");
  // validate() reports "weights.<term>[m][i]"
  try {
    w.validate(n, horizon);
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
}

void parse_penalty(const Section& s, PenaltySpec& p, CostSplit& split) {
  s.allow({"sigma", "lambda", "split"});
  const long long sigma = s.integer_or("sigma", 2);
  if (sigma < 1 || sigma > 64) fail(s.field("sigma"), "must be an integer in [1, 64]");
  p.sigma = static_cast<int>(sigma);
  p.lambda = s.number_or("lambda", 1.0);
  if (!(p.lambda > 0.0)) fail(s.field("lambda"), "must be positive");
  const std::string sp = s.string_or("split", "per-vehicle");
  if (sp == "per-vehicle") {
    split = CostSplit::per_vehicle;
  } else if (sp == "uniform") {
    split = CostSplit::uniform;
  } else {
    fail(s.field("split"), "must be \"per-vehicle\" or \"uniform\"");
  }
}

void parse_solver(const Section& s, SolverSettings& out) {
  s.allow({"alpha", "domain_radius", "iters", "seed", "init_scale", "divergence_threshold", "tracker_init",
           "quantizer", "rho"});
  const auto auto_or_positive = [&](std::string_view key) -> std::optional<double> {
    if (!s.has(key)) return std::nullopt;
    const json& v = s.at(key);
    if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
    if (!v.is_number()) fail(s.field(key), "must be a positive number or \"auto\"");
    const double x = Section::as_number(v, s.field(key));
    if (!(x > 0.0)) fail(s.field(key), "must be positive");
    return x;
  };
  out.alpha = auto_or_positive("alpha");
  out.domain_radius = auto_or_positive("domain_radius");

  SolverConfig& b = out.base;
  const long long iters = s.integer_or("iters", 50000);
  if (iters < 1) fail(s.field("iters"), "must be >= 1");
  b.iters = static_cast<std::size_t>(iters);
  if (s.has("seed")) {
    const json& v = s.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(s.field("seed"), "must be a nonnegative integer");
    }
    b.seed = v.get<std::uint64_t>();
  }
  b.init_scale = s.number_or("init_scale", 1.0);
  if (b.init_scale < 0.0) fail(s.field("init_scale"), "must be nonnegative");
  b.divergence_threshold = s.number_or("divergence_threshold", 1e12);
  if (!(b.divergence_threshold > 0.0)) fail(s.field("divergence_threshold"), "must be positive");
  const std::string init = s.string_or("tracker_init", "zero");
  if (init == "zero") {
    b.tracker_init = TrackerInit::zero;
  } else if (init == "gradient") {
    b.tracker_init = TrackerInit::gradient;
  } else {
    fail(s.field("tracker_init"), "must be \"zero\" or \"gradient\"");
  }
  b.quantizer = parse_quantizer(s);
}

std::vector<QuantizerSpec> parse_sweep(const json& v) {
  if (!v.is_array()) fail("sweep", "must be an array of {quantizer, rho}");
  std::vector<QuantizerSpec> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Section s(v[k], indexed("sweep", k));
    s.allow({"quantizer", "rho"});
    QuantizerSpec q = parse_quantizer(s);
    if (q.kind == QuantizerKind::none) q.level = 0.0;
    for (std::size_t prev = 0; prev < out.size(); ++prev) {
      if (out[prev].kind == q.kind && out[prev].level == q.level) {
        fail(indexed("sweep", k), "duplicates sweep[" + std::to_string(prev) + "]");
      }
    }
    out.push_back(q);
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json table_json(const std::vector<Eigen::VectorXd>& t) {
  json out = json::array();
  for (const auto& row : t) out.push_back(vector_json(row));
  return out;
}

json quantizer_json(const QuantizerSpec& q) {
  return {{"quantizer", std::string(to_string(q.kind))}, {"rho", q.level}};
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

CommGraph GraphConfig::build() const {
  if (topology == "cycle") return build_cycle(n, weight);
  CommGraph::WeightMap map;
  for (const auto& [i, j, w] : edges) {
    if (!map.emplace(std::make_pair(i, j), w).second) {
      throw InvalidParameter("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") listed twice");
    }
  }
  return CommGraph(n, std::move(map));
}

std::vector<QuantizerSpec> ExperimentConfig::variants() const {
  if (!sweep.empty()) return sweep;
  return {solver.base.quantizer};
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  const Section root(j, "");
  root.allow({"scenario", "graph", "weights", "penalty", "solver", "sweep", "output"});
  parse_scenario(root.child("scenario"), cfg.scenario);
  const int n = cfg.scenario.n;
  if (root.has("graph")) {
    parse_graph(root.child("graph"), cfg.graph, n);
  } else {
    parse_graph(Section(json::object(), "graph"), cfg.graph, n);
  }
  parse_weights(root.has("weights") ? root.child("weights") : Section(json::object(), "weights"), cfg.weights, n,
                cfg.scenario.horizon);
  parse_penalty(root.has("penalty") ? root.child("penalty") : Section(json::object(), "penalty"), cfg.penalty,
                cfg.split);
  parse_solver(root.has("solver") ? root.child("solver") : Section(json::object(), "solver"), cfg.solver);
  if (root.has("sweep")) cfg.sweep = parse_sweep(root.at("sweep"));
  cfg.output = root.string_or("output", cfg.output);
  if (cfg.output.empty()) fail("output", "must be a nonempty directory path");
  return cfg;
}

json parse_json_text(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::size_t start = 0;
    for (std::size_t l = 1; l < line; ++l) start = text.find('\n', start) + 1;
    const std::string_view snippet = text.substr(start, text.find('\n', start) - start);
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": parse error: " + e.what() + "\n  " + std::string(snippet));
  }
}

ExperimentConfig load_config_text(std::string_view text, std::string_view source) {
  return parse_config(parse_json_text(text, source));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading config " + path.string());
  return load_config_text(buf.str(), path.string());
}

json to_json(const ExperimentConfig& cfg) {
  const auto& s = cfg.scenario;
  json scenario = {
      {"n", s.n},
      {"tau", s.tau},
      {"T", s.horizon},
      {"delta", s.spacing},
      {"l", s.length},
      {"eps", s.reaction},
      {"limits",
       {{"v_min", s.limits.v_min}, {"v_max", s.limits.v_max}, {"a_min", s.limits.a_min}, {"a_max", s.limits.a_max}}},
      {"leader", {{"p0", s.leader.position}, {"v0", s.leader.velocity}, {"u0", vector_json(s.leader.input)}}},
      {"init", {{"positions", vector_json(s.positions)}, {"velocities", vector_json(s.velocities)}}},
  };

  json graph = {{"topology", cfg.graph.topology}, {"n", cfg.graph.n}};
  if (cfg.graph.topology == "cycle") {
    graph["weight"] = cfg.graph.weight;
  } else {
    json edges = json::array();
    for (const auto& [i, j, w] : cfg.graph.edges) edges.push_back({i, j, w});
    graph["edges"] = std::move(edges);
  }

  const auto& b = cfg.solver.base;
  json solver = {
      {"alpha", cfg.solver.alpha ? json(*cfg.solver.alpha) : json("auto")},
      {"domain_radius", cfg.solver.domain_radius ? json(*cfg.solver.domain_radius) : json("auto")},
      {"iters", b.iters},
      {"seed", b.seed},
      {"init_scale", b.init_scale},
      {"divergence_threshold", b.divergence_threshold},
      {"tracker_init", b.tracker_init == TrackerInit::zero ? "zero" : "gradient"},
  };
  solver.update(quantizer_json(b.quantizer));

  json out = {
      {"scenario", std::move(scenario)},
      {"graph", std::move(graph)},
      {"weights",
       {{"input", table_json(cfg.weights.input)},
        {"position", table_json(cfg.weights.position)},
        {"velocity", table_json(cfg.weights.velocity)}}},
      {"penalty",
       {{"sigma", cfg.penalty.sigma},
        {"lambda", cfg.penalty.lambda},
        {"split", cfg.split == CostSplit::per_vehicle ? "per-vehicle" : "uniform"}}},
      {"solver", std::move(solver)},
      {"output", cfg.output},
  };
  if (!cfg.sweep.empty()) {
    json sweep = json::array();
    for (const auto& q : cfg.sweep) sweep.push_back(quantizer_json(q));
    out["sweep"] = std::move(sweep);
  }
  return out;
}

std::string variant_name(const QuantizerSpec& q) {
  if (q.kind == QuantizerKind::none) return "none";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, q.level);
  return std::string(to_string(q.kind)) + "_" + std::string(buf, res.ptr);
}

namespace {

// Platoon cruising at 10 m/s with 30 m target gaps. Initial gaps and speeds
// carry small seeded disturbances; weights are drawn per vehicle and step.
json preset_base(std::string_view name) {
  constexpr int n = 10;
  constexpr int horizon = 5;
  constexpr double delta = 30.0;
  constexpr double v0 = 10.0;

  std::mt19937_64 init_rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> positions, velocities;
  double p = 0.0;
  for (int i = 0; i < n; ++i) {
    p -= delta + 0.5 * unit(init_rng);
    positions.push_back(p);
    velocities.push_back(v0 + 0.05 * unit(init_rng));
  }

  std::mt19937_64 weight_rng(11);
  std::uniform_real_distribution<double> spread(0.5, 1.5);
  const auto draw = [&](double scale) {
    json table = json::array();
    for (int m = 0; m < horizon; ++m) {
      std::vector<double> row;
      for (int i = 0; i < n; ++i) row.push_back(scale * spread(weight_rng));
      table.push_back(row);
    }
    return table;
  };
  json weights;
  weights["input"] = draw(300.0);
  weights["position"] = draw(3.0);
  weights["velocity"] = draw(3.0);

  return {
      {"scenario",
       {{"n", n},
        {"tau", 0.1},
        {"T", horizon},
        {"delta", delta},
        {"l", 4.0},
        {"eps", 0.5},
        {"limits", {{"v_min", 0.0}, {"v_max", 30.0}, {"a_min", -3.0}, {"a_max", 3.0}}},
        {"leader", {{"p0", 0.0}, {"v0", v0}, {"u0", std::vector<double>(horizon, 0.0)}}},
        {"init", {{"positions", positions}, {"velocities", velocities}}}}},
      {"graph", {{"topology", "cycle"}, {"n", n}, {"weight", 0.45}}},
      {"weights", std::move(weights)},
      {"penalty", {{"sigma", 2}, {"lambda", 1.0}, {"split", "per-vehicle"}}},
      {"solver",
       {{"alpha", "auto"},
        {"domain_radius", "auto"},
        {"iters", 100000},
        {"seed", 1},
        {"init_scale", 1.0},
        {"divergence_threshold", 1e12},
        {"tracker_init", "gradient"},
        {"quantizer", "none"},
        {"rho", 0.0}}},
      {"output", "out/" + std::string(name)},
  };
}

}  // namespace

std::vector<std::string> preset_names() { return {"paper-fig2", "paper-fig3"}; }

json preset_config(std::string_view name) {
  json cfg = preset_base(name);
  if (name == "paper-fig2") {
    cfg["sweep"] = json::array({{{"quantizer", "log"}, {"rho", 1.0 / 8}},
                                {{"quantizer", "log"}, {"rho", 1.0 / 32}},
                                {{"quantizer", "log"}, {"rho", 1.0 / 128}}});
  } else if (name == "paper-fig3") {
    cfg["sweep"] = json::array({{{"quantizer", "log"}, {"rho", 0.0625}}, {{"quantizer", "uniform"}, {"rho", 0.0625}}});
  } else {
    throw ConfigError("unknown preset \"" + std::string(name) + "\" (known: paper-fig2, paper-fig3)");
  }
  return cfg;
}

}  // namespace pgt
