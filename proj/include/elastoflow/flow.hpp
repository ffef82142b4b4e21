#pragma once

#include "elastoflow/diagnostics.hpp"
#include "elastoflow/elasticity.hpp"
#include "elastoflow/error.hpp"
#include "elastoflow/grid.hpp"

#include <functional>
#include <string>
#include <vector>

namespace elastoflow::flow {

enum class Coupling { lagged, picard };
enum class Adaptivity { fixed, energy };

/// Prescribed space-time forcing added to the chemical potential.
struct Forcing {
  std::function<Field(const Grid&, double t)> fn;

  explicit operator bool() const { return static_cast<bool>(fn); }
  Field operator()(const Grid& grid, double t) const { return fn(grid, t); }
};

/// amplitude * sin(2 pi k x1) * exp(-decay t).
Forcing mode_forcing(int k, double amplitude, double decay);

struct StepperConfig {
  double tau0 = 1e-6;
  double tau_min = 1e-12;
  double tau_max = 1e-3;
  Adaptivity adaptivity = Adaptivity::fixed;
  Coupling coupling = Coupling::lagged;
  double tol = 1e-10;
  int max_iter = 20;
  /// +1 film orientation, -1 the opposite convention on the same geometry.
  double sigma = 1.0;
  Forcing forcing;
};

struct FlowSettings {
  elasticity::ElasticSetup elastic;
  StepperConfig stepper;
  double h_min = 1e-3;
  bool dealias = true;
};

void validate(const FlowSettings& settings);

struct StepStats {
  double tau = 0.0;
  int rejects = 0;
  int coupling_iters = 0;
  double coupling_residual = 0.0;
  long solver_iterations = 0;
};

struct FlowState {
  double t = 0.0;
  elasticity::Equilibrium eq;
  double energy_surface = 0.0;
  StepStats last_step;
  double next_tau = 0.0;

  const HeightField& h() const { return eq.h; }
};

/// The film ran into the substrate and the step could not be salvaged by halving tau.
class PinchOff : public Error {
 public:
  using Error::Error;
};

/// dh/dt = J Lap_g(H + f_total). With dealias the products are formed on a 3/2 padded grid.
Field rhs(const HeightField& h, const Field& f_total, bool dealias = true);

/// One IMEX step: -Lap^2 implicit, the remainder rhs + Lap^2 h explicit. The mean of h is
/// preserved exactly.
HeightField forced_step(const HeightField& h, const Field& f_total, double tau, bool dealias = true);

/// int h dx over the unit cell.
double volume(const HeightField& h);

/// surface + sigma * bulk, the energy the flow dissipates.
double flow_energy(const FlowState& state, double sigma);

FlowState initial_state(const HeightField& h0, const FlowSettings& settings, double t0 = 0.0);

/// Advances one accepted step, halving tau on rejection. Throws PinchOff or SolverFailure
/// once tau would drop below tau_min.
FlowState step_coupled(const FlowState& state, const FlowSettings& settings);

/// Same as step_coupled but with a caller-chosen step size that is never grown.
FlowState step_coupled(const FlowState& state, const FlowSettings& settings, double tau);

enum class RunStatus { completed, pinch_off, solver_failure };

const char* to_string(RunStatus status);

struct CheckpointPolicy {
  /// Emit a diagnostics row every this many accepted steps (the initial and final
  /// states are always emitted).
  int every = 1;
  /// Called for every emitted row with the running checkpoint index.
  std::function<void(const FlowState&, int index)> on_checkpoint;
};

struct Trajectory {
  std::vector<diagnostics::DiagnosticsRow> rows;
  FlowState final_state;
  RunStatus status = RunStatus::completed;
  std::string message;
  long steps = 0;
};

Trajectory run(const HeightField& initial, const FlowSettings& settings, double t_end,
               const CheckpointPolicy& policy, double d_ref);

}  // namespace elastoflow::flow
