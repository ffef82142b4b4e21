#include "elastoflow/config.hpp"

#include "elastoflow/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace elastoflow::config {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

double read_number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return obj.at(key).get<double>();
}

int read_int(const json& obj, const char* key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return obj.at(key).get<int>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

/// Uniform in [-1, 1) from the raw generator output; identical on every platform.
double symmetric_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace

SimConfig parse(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(root,
                 {"mode", "n", "m", "d", "e0", "lame", "sigma", "stepper", "t_end", "perturbation", "forcing",
                  "output", "h_min", "solver", "dealias", "scan", "psi", "energy_identity"},
                 "config");
  SimConfig cfg;
  if (root.contains("mode")) {
    std::string mode;
    read(root, "mode", mode, "config");
    if (mode == "reduced") cfg.mode = Mode::reduced;
    else if (mode == "full") cfg.mode = Mode::full;
    else throw ConfigError("config.mode: expected 'reduced' or 'full'");
  }
  cfg.n = read_int(root, "n", cfg.n, "config");
  cfg.m = read_int(root, "m", cfg.m, "config");
  cfg.d = read_number(root, "d", cfg.d, "config");
  cfg.e0 = read_number(root, "e0", cfg.e0, "config");
  cfg.sigma = read_number(root, "sigma", cfg.sigma, "config");
  cfg.t_end = read_number(root, "t_end", cfg.t_end, "config");
  if (root.contains("h_min")) cfg.h_min = read_number(root, "h_min", 0.0, "config");
  read(root, "dealias", cfg.dealias, "config");

  if (root.contains("lame")) {
    const json& lame = root.at("lame");
    reject_unknown(lame, {"lambda", "mu"}, "config.lame");
    cfg.lambda = read_number(lame, "lambda", cfg.lambda, "config.lame");
    cfg.mu = read_number(lame, "mu", cfg.mu, "config.lame");
  }

  if (root.contains("stepper")) {
    const json& s = root.at("stepper");
    const std::string where = "config.stepper";
    reject_unknown(s, {"tau0", "tau_min", "tau_max", "adaptivity", "coupling", "tol", "max_iter"}, where);
    cfg.stepper.tau0 = read_number(s, "tau0", cfg.stepper.tau0, where);
    cfg.stepper.tau_min = read_number(s, "tau_min", cfg.stepper.tau_min, where);
    cfg.stepper.tau_max = read_number(s, "tau_max", cfg.stepper.tau_max, where);
    cfg.stepper.tol = read_number(s, "tol", cfg.stepper.tol, where);
    cfg.stepper.max_iter = read_int(s, "max_iter", cfg.stepper.max_iter, where);
    if (s.contains("adaptivity")) {
      std::string a;
      read(s, "adaptivity", a, where);
      if (a == "fixed") cfg.stepper.adaptivity = flow::Adaptivity::fixed;
      else if (a == "energy") cfg.stepper.adaptivity = flow::Adaptivity::energy;
      else throw ConfigError(where + ".adaptivity: expected 'fixed' or 'energy'");
    }
    if (s.contains("coupling")) {
      std::string c;
      read(s, "coupling", c, where);
      if (c == "lagged") cfg.stepper.coupling = flow::Coupling::lagged;
      else if (c == "picard") cfg.stepper.coupling = flow::Coupling::picard;
      else throw ConfigError(where + ".coupling: expected 'lagged' or 'picard'");
    }
  }

  if (root.contains("perturbation")) {
    const json& p = root.at("perturbation");
    const std::string where = "config.perturbation";
    reject_unknown(p, {"kind", "k", "amplitude", "seed", "band"}, where);
    std::string kind = "none";
    read(p, "kind", kind, where);
    if (kind == "none") cfg.perturbation.kind = Perturbation::Kind::none;
    else if (kind == "single_mode") cfg.perturbation.kind = Perturbation::Kind::single_mode;
    else if (kind == "random") cfg.perturbation.kind = Perturbation::Kind::random;
    else throw ConfigError(where + ".kind: expected 'none', 'single_mode' or 'random'");
    cfg.perturbation.k = read_int(p, "k", cfg.perturbation.k, where);
    cfg.perturbation.amplitude = read_number(p, "amplitude", cfg.perturbation.amplitude, where);
    cfg.perturbation.band = read_int(p, "band", cfg.perturbation.band, where);
    if (p.contains("seed")) {
      if (!p.at("seed").is_number_unsigned()) throw ConfigError(where + ".seed: expected a non-negative integer");
      cfg.perturbation.seed = p.at("seed").get<std::uint64_t>();
    }
  }

  if (root.contains("forcing")) {
    const json& f = root.at("forcing");
    const std::string where = "config.forcing";
    reject_unknown(f, {"kind", "k", "amplitude", "decay"}, where);
    std::string kind = "mode";
    read(f, "kind", kind, where);
    if (kind == "none") cfg.forcing.enabled = false;
    else if (kind == "mode") cfg.forcing.enabled = true;
    else throw ConfigError(where + ".kind: expected 'none' or 'mode'");
    cfg.forcing.k = read_int(f, "k", cfg.forcing.k, where);
    cfg.forcing.amplitude = read_number(f, "amplitude", cfg.forcing.amplitude, where);
    cfg.forcing.decay = read_number(f, "decay", cfg.forcing.decay, where);
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    reject_unknown(o, {"dir", "checkpoint_every"}, "config.output");
    read(o, "dir", cfg.output.dir, "config.output");
    cfg.output.checkpoint_every = read_int(o, "checkpoint_every", cfg.output.checkpoint_every, "config.output");
  }

  if (root.contains("solver")) {
    const json& s = root.at("solver");
    reject_unknown(s, {"kind", "tol", "max_iterations"}, "config.solver");
    if (s.contains("kind")) {
      std::string kind;
      read(s, "kind", kind, "config.solver");
      if (kind == "cg") cfg.solver.kind = elasticity::SolverKind::conjugate_gradient;
      else if (kind == "direct") cfg.solver.kind = elasticity::SolverKind::direct;
      else throw ConfigError("config.solver.kind: expected 'cg' or 'direct'");
    }
    cfg.solver.tolerance = read_number(s, "tol", cfg.solver.tolerance, "config.solver");
    cfg.solver.max_iterations = read_int(s, "max_iterations", 0, "config.solver");
  }

  if (root.contains("scan")) {
    const json& s = root.at("scan");
    reject_unknown(s, {"d_list", "cutoff"}, "config.scan");
    if (s.contains("d_list")) {
      if (!s.at("d_list").is_array()) throw ConfigError("config.scan.d_list: expected an array");
      for (const auto& v : s.at("d_list")) {
        if (!v.is_number()) throw ConfigError("config.scan.d_list: expected numbers");
        cfg.scan.d_list.push_back(v.get<double>());
      }
    }
    cfg.scan.cutoff = read_int(s, "cutoff", cfg.scan.cutoff, "config.scan");
  }

  if (root.contains("psi")) {
    const json& p = root.at("psi");
    reject_unknown(p, {"k1", "k2", "kind"}, "config.psi");
    cfg.psi.k1 = read_int(p, "k1", cfg.psi.k1, "config.psi");
    cfg.psi.k2 = read_int(p, "k2", cfg.psi.k2, "config.psi");
    if (p.contains("kind")) {
      std::string kind;
      read(p, "kind", kind, "config.psi");
      if (kind == "cos") cfg.psi.cosine = true;
      else if (kind == "sin") cfg.psi.cosine = false;
      else throw ConfigError("config.psi.kind: expected 'cos' or 'sin'");
    }
  }

  if (root.contains("energy_identity")) {
    const json& e = root.at("energy_identity");
    const std::string where = "config.energy_identity";
    reject_unknown(e, {"start_time", "tau", "refinements"}, where);
    cfg.energy_identity.start_time = read_number(e, "start_time", cfg.energy_identity.start_time, where);
    cfg.energy_identity.tau = read_number(e, "tau", cfg.energy_identity.tau, where);
    cfg.energy_identity.refinements = read_int(e, "refinements", cfg.energy_identity.refinements, where);
  }

  cfg.stepper.sigma = cfg.sigma;
  validate(cfg);
  return cfg;
}

SimConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void validate(const SimConfig& cfg) {
  require(cfg.n >= 8 && cfg.n % 2 == 0, "config.n: must be even and >= 8");
  require(cfg.m >= 4, "config.m: must be >= 4");
  require(std::isfinite(cfg.d) && cfg.d > 0.0, "config.d: must be positive");
  require(std::isfinite(cfg.e0), "config.e0: must be finite");
  require(cfg.lambda > 0.0 && cfg.mu > 0.0, "config.lame: lambda and mu must be positive");
  require(cfg.sigma == 1.0 || cfg.sigma == -1.0, "config.sigma: must be +1 or -1");
  require(std::isfinite(cfg.t_end) && cfg.t_end >= 0.0, "config.t_end: must be non-negative");
  const auto& s = cfg.stepper;
  require(s.tau_min > 0.0 && s.tau_min <= s.tau0 && s.tau0 <= s.tau_max,
          "config.stepper: need 0 < tau_min <= tau0 <= tau_max");
  require(s.tol > 0.0, "config.stepper.tol: must be positive");
  require(s.max_iter >= 1, "config.stepper.max_iter: must be >= 1");
  const auto& p = cfg.perturbation;
  require(p.amplitude >= 0.0 && std::isfinite(p.amplitude), "config.perturbation.amplitude: must be non-negative");
  require(p.k >= 1 && 2 * p.k < cfg.n, "config.perturbation.k: must be in 1..n/2-1");
  require(p.band >= 1 && 2 * p.band < cfg.n, "config.perturbation.band: must be in 1..n/2-1");
  if (cfg.forcing.enabled) {
    require(cfg.forcing.k >= 1 && 2 * cfg.forcing.k < cfg.n, "config.forcing.k: must be in 1..n/2-1");
    require(std::isfinite(cfg.forcing.amplitude) && std::isfinite(cfg.forcing.decay),
            "config.forcing: amplitude and decay must be finite");
  }
  require(cfg.output.checkpoint_every >= 1, "config.output.checkpoint_every: must be >= 1");
  require(!cfg.output.dir.empty(), "config.output.dir: must not be empty");
  if (cfg.h_min) require(*cfg.h_min > 0.0 && *cfg.h_min < cfg.d, "config.h_min: must be in (0, d)");
  require(cfg.solver.tolerance > 0.0, "config.solver.tol: must be positive");
  require(cfg.solver.max_iterations >= 0, "config.solver.max_iterations: must be non-negative");
  for (double d : cfg.scan.d_list) require(d > 0.0 && std::isfinite(d), "config.scan.d_list: entries must be positive");
  require(cfg.scan.cutoff >= 0 && 3 * cfg.scan.cutoff <= cfg.n, "config.scan.cutoff: must be in 0..n/3");
  require(cfg.psi.k1 >= 0 && (cfg.psi.k1 != 0 || cfg.psi.k2 != 0), "config.psi: mode must be non-zero");
  require(2 * cfg.psi.k1 < cfg.n && 2 * std::abs(cfg.psi.k2) < cfg.n, "config.psi: mode must be below Nyquist");
  require(cfg.mode == Mode::full || cfg.psi.k2 == 0, "config.psi.k2: must be 0 in reduced mode");
  require(cfg.energy_identity.start_time >= 0.0, "config.energy_identity.start_time: must be non-negative");
  require(cfg.energy_identity.tau > 0.0, "config.energy_identity.tau: must be positive");
  require(cfg.energy_identity.refinements >= 0, "config.energy_identity.refinements: must be non-negative");
}

elasticity::ElasticSetup elastic_setup(const SimConfig& cfg) {
  elasticity::ElasticSetup setup;
  setup.tensor = elasticity::ElasticTensor::isotropic(cfg.lambda, cfg.mu);
  setup.e0 = cfg.e0;
  setup.m = cfg.m;
  setup.solver = cfg.solver;
  return setup;
}

flow::FlowSettings flow_settings(const SimConfig& cfg) {
  flow::FlowSettings settings;
  settings.elastic = elastic_setup(cfg);
  settings.stepper = cfg.stepper;
  settings.stepper.sigma = cfg.sigma;
  if (cfg.forcing.enabled) {
    settings.stepper.forcing = flow::mode_forcing(cfg.forcing.k, cfg.forcing.amplitude, cfg.forcing.decay);
  }
  settings.h_min = cfg.effective_h_min();
  settings.dealias = cfg.dealias;
  return settings;
}

HeightField initial_height(const SimConfig& cfg) {
  const Grid grid = cfg.grid();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const auto& p = cfg.perturbation;
  Field values = Field::Constant(static_cast<Eigen::Index>(grid.size()), cfg.d);
  if (p.kind == Perturbation::Kind::single_mode) {
    values += grid.sample([&](double x1, double) { return p.amplitude * std::cos(two_pi * p.k * x1); });
  } else if (p.kind == Perturbation::Kind::random && p.amplitude > 0.0) {
    std::mt19937_64 rng(p.seed);
    Field bump = Field::Zero(values.size());
    const int k2_max = grid.surface_dim() == 2 ? p.band : 0;
    for (int k1 = 0; k1 <= p.band; ++k1)
      for (int k2 = -k2_max; k2 <= k2_max; ++k2) {
        if (k1 == 0 && k2 <= 0) continue;
        const double a = symmetric_uniform(rng);
        const double b = symmetric_uniform(rng);
        bump += grid.sample([&](double x1, double x2) {
          const double phase = two_pi * (k1 * x1 + k2 * x2);
          return a * std::cos(phase) + b * std::sin(phase);
        });
      }
    const double peak = bump.cwiseAbs().maxCoeff();
    if (peak > 0.0) values += (p.amplitude / peak) * bump;
  }
  return HeightField(grid, values);
}

}  // namespace elastoflow::config
