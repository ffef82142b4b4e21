#pragma once

#include "elastoflow/flow.hpp"
#include "elastoflow/grid.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace elastoflow::config {

enum class Mode { reduced, full };

struct Perturbation {
  enum class Kind { none, single_mode, random };
  Kind kind = Kind::none;
  int k = 1;
  double amplitude = 0.0;
  std::uint64_t seed = 0;
  int band = 4;
};

struct ForcingSpec {
  bool enabled = false;
  int k = 1;
  double amplitude = 0.0;
  double decay = 0.0;
};

struct OutputSpec {
  std::string dir = "out";
  int checkpoint_every = 1;
};

struct ScanSpec {
  std::vector<double> d_list;
  /// 0 selects n / 4.
  int cutoff = 0;
};

struct PsiSpec {
  int k1 = 1;
  int k2 = 0;
  bool cosine = true;
};

struct IdentitySpec {
  /// Time reached with fixed steps before the three-snapshot window starts.
  double start_time = 0.0;
  double tau = 1e-6;
  /// Number of successive tau halvings reported after the base window.
  int refinements = 1;
};

struct SimConfig {
  Mode mode = Mode::reduced;
  int n = 64;
  int m = 16;
  double d = 0.1;
  double e0 = 0.0;
  double lambda = 1.0;
  double mu = 1.0;
  double sigma = 1.0;
  flow::StepperConfig stepper;
  double t_end = 0.0;
  Perturbation perturbation;
  ForcingSpec forcing;
  OutputSpec output;
  /// Defaults to 1e-3 * d when absent.
  std::optional<double> h_min;
  elasticity::SolverOptions solver;
  bool dealias = true;
  ScanSpec scan;
  PsiSpec psi;
  IdentitySpec energy_identity;

  int surface_dim() const { return mode == Mode::reduced ? 1 : 2; }
  Grid grid() const { return Grid(surface_dim(), n); }
  double effective_h_min() const { return h_min.value_or(1e-3 * d); }
};

/// Parses and validates a JSON document. Unknown keys and out-of-range values throw ConfigError.
SimConfig parse(const std::string& json_text);
SimConfig load(const std::string& path);

/// Checks every positivity and consistency constraint.
void validate(const SimConfig& cfg);

flow::FlowSettings flow_settings(const SimConfig& cfg);
elasticity::ElasticSetup elastic_setup(const SimConfig& cfg);

/// d plus the configured perturbation. Random perturbations are band-limited to
/// |k| <= band and scaled to the given maximum absolute amplitude.
HeightField initial_height(const SimConfig& cfg);

}  // namespace elastoflow::config
