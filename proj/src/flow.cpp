#include "elastoflow/flow.hpp"

#include "elastoflow/geometry.hpp"
#include "elastoflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace elastoflow::flow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kEnergySlack = 1e-10;
constexpr double kGrowth = 1.2;

Grid padded_grid(const Grid& grid) {
  int n = (3 * grid.n() + 1) / 2;
  if (n % 2 != 0) ++n;
  return Grid(grid.surface_dim(), n);
}

Field unpadded_rhs(const HeightField& h, const Field& f_total) {
  const auto geom = geometry::compute_geometry(h);
  const Field mu = geom.H + f_total;
  return geom.J.cwiseProduct(geometry::laplace_beltrami(mu, geom));
}

/// Chemical-potential forcing sigma * q + f at time t for the given equilibrium.
Field coupling_forcing(const elasticity::Equilibrium& eq, const StepperConfig& cfg, double t) {
  Field f = cfg.sigma * eq.trace.q;
  if (cfg.forcing) f += cfg.forcing(eq.h.grid, t);
  return f;
}

double cell_l2(const Field& f) { return std::sqrt(cell_mean(f.cwiseAbs2())); }

struct Attempt {
  std::optional<FlowState> state;
  bool solver_failed = false;
  bool pinched = false;
  std::string reason;
};

Attempt attempt_step(const FlowState& state, const FlowSettings& settings, double tau) {
  const StepperConfig& cfg = settings.stepper;
  Attempt attempt;
  auto admissible = [&](const HeightField& h) {
    if (!h.all_finite()) {
      attempt.reason = "non-finite height";
      return false;
    }
    if (h.min() <= settings.h_min) {
      attempt.pinched = true;
      attempt.reason = "film thickness reached h_min";
      return false;
    }
    return true;
  };

  FlowState next;
  next.t = state.t + tau;
  next.last_step.tau = tau;
  const Field f0 = coupling_forcing(state.eq, cfg, state.t);
  try {
    HeightField h = forced_step(state.eq.h, f0, tau, settings.dealias);
    if (!admissible(h)) return attempt;
    elasticity::Equilibrium eq = elasticity::solve_state(h, settings.elastic, &state.eq.u);
    int iters = 1;
    double residual = 0.0;
    if (cfg.coupling == Coupling::picard) {
      const Field f_ext = cfg.forcing ? cfg.forcing(h.grid, state.t) : Field::Zero(h.values.size());
      residual = cell_l2(eq.trace.q - state.eq.trace.q);
      while (residual >= cfg.tol && iters < cfg.max_iter) {
        HeightField h_next = forced_step(state.eq.h, cfg.sigma * eq.trace.q + f_ext, tau, settings.dealias);
        if (!admissible(h_next)) return attempt;
        elasticity::Equilibrium eq_next = elasticity::solve_state(h_next, settings.elastic, &eq.u);
        residual = cell_l2(eq_next.trace.q - eq.trace.q);
        eq = std::move(eq_next);
        ++iters;
      }
      if (residual >= cfg.tol) {
        attempt.reason = "coupling iteration did not converge";
        return attempt;
      }
    }
    next.eq = std::move(eq);
    next.last_step.coupling_iters = iters;
    next.last_step.coupling_residual = residual;
    next.last_step.solver_iterations = next.eq.u.stats.iterations;
  } catch (const SolverFailure& e) {
    attempt.solver_failed = true;
    attempt.reason = e.what();
    return attempt;
  } catch (const DegenerateGeometry& e) {
    attempt.pinched = true;
    attempt.reason = e.what();
    return attempt;
  } catch (const InvalidInput& e) {
    attempt.reason = e.what();
    return attempt;
  }

  const auto geom = geometry::compute_geometry(next.eq.h);
  next.energy_surface = geometry::surface_integral(Field::Ones(next.eq.h.values.size()), geom);
  if (cfg.adaptivity == Adaptivity::energy && !cfg.forcing &&
      flow_energy(next, cfg.sigma) > flow_energy(state, cfg.sigma) + kEnergySlack) {
    attempt.reason = "energy increased";
    return attempt;
  }
  attempt.state = std::move(next);
  return attempt;
}

FlowState advance(const FlowState& state, const FlowSettings& settings, double tau, bool allow_growth) {
  const StepperConfig& cfg = settings.stepper;
  int rejects = 0;
  while (true) {
    Attempt attempt = attempt_step(state, settings, tau);
    if (attempt.state) {
      FlowState next = std::move(*attempt.state);
      next.last_step.rejects = rejects;
      double proposal = std::max(state.next_tau, tau);
      if (cfg.adaptivity == Adaptivity::energy) {
        proposal = rejects == 0 && allow_growth ? std::min(tau * kGrowth, cfg.tau_max) : tau;
      } else if (rejects > 0) {
        proposal = tau;
      }
      next.next_tau = proposal;
      return next;
    }
    ++rejects;
    tau *= 0.5;
    if (tau < cfg.tau_min) {
      const std::string msg = "step rejected below tau_min at t = " + std::to_string(state.t) + ": " + attempt.reason;
      if (attempt.solver_failed) throw SolverFailure(msg, 0.0, 0);
      if (attempt.pinched) throw PinchOff(msg);
      throw SolverFailure(msg, 0.0, 0);
    }
  }
}

}  // namespace

Forcing mode_forcing(int k, double amplitude, double decay) {
  Forcing forcing;
  forcing.fn = [k, amplitude, decay](const Grid& grid, double t) {
    const double scale = amplitude * std::exp(-decay * t);
    return grid.sample([&](double x1, double) { return scale * std::sin(kTwoPi * k * x1); });
  };
  return forcing;
}

void validate(const FlowSettings& settings) {
  const StepperConfig& cfg = settings.stepper;
  if (!(cfg.tau_min > 0.0) || !(cfg.tau_min <= cfg.tau0) || !(cfg.tau0 <= cfg.tau_max)) {
    throw InvalidInput("stepper: need 0 < tau_min <= tau0 <= tau_max");
  }
  if (!(cfg.tol > 0.0)) throw InvalidInput("stepper: tol must be positive");
  if (cfg.max_iter < 1) throw InvalidInput("stepper: max_iter must be >= 1");
  if (cfg.sigma != 1.0 && cfg.sigma != -1.0) throw InvalidInput("stepper: sigma must be +1 or -1");
  if (!(settings.h_min > 0.0)) throw InvalidInput("h_min must be positive");
}

Field rhs(const HeightField& h, const Field& f_total, bool dealias) {
  require_field_size(h.grid, h.values, "rhs height");
  require_field_size(h.grid, f_total, "rhs forcing");
  if (!dealias) return unpadded_rhs(h, f_total);
  const Grid fine = padded_grid(h.grid);
  const auto& coarse = Spectral::for_grid(h.grid);
  const HeightField h_fine(fine, coarse.resample(h.values, fine));
  const Field out_fine = unpadded_rhs(h_fine, coarse.resample(f_total, fine));
  return Spectral::for_grid(fine).resample(out_fine, h.grid);
}

HeightField forced_step(const HeightField& h, const Field& f_total, double tau, bool dealias) {
  if (!(tau > 0.0)) throw InvalidInput("forced_step: tau must be positive");
  const auto& spectral = Spectral::for_grid(h.grid);
  const Field remainder = rhs(h, f_total, dealias) + spectral.bilaplacian(h.values);
  Coefficients ch = spectral.forward(h.values);
  Coefficients cn = spectral.forward(remainder);
  cn[0] = 0.0;
  const Grid& grid = h.grid;
  const int n = grid.n();
  for (std::size_t idx = 0; idx < ch.size(); ++idx) {
    const int i1 = grid.surface_dim() == 1 ? static_cast<int>(idx) : static_cast<int>(idx) / n;
    const int i2 = grid.surface_dim() == 1 ? 0 : static_cast<int>(idx) % n;
    const double k1 = kTwoPi * grid.wavenumber(i1);
    const double k2 = grid.surface_dim() == 2 ? kTwoPi * grid.wavenumber(i2) : 0.0;
    const double k2sum = k1 * k1 + k2 * k2;
    ch[idx] = (ch[idx] + tau * cn[idx]) / (1.0 + tau * k2sum * k2sum);
  }
  return HeightField(grid, spectral.inverse(ch));
}

double volume(const HeightField& h) { return cell_mean(h.values); }

double flow_energy(const FlowState& state, double sigma) {
  return state.energy_surface + sigma * state.eq.bulk_energy;
}

FlowState initial_state(const HeightField& h0, const FlowSettings& settings, double t0) {
  validate(settings);
  if (!h0.all_finite()) throw InvalidInput("initial height has non-finite samples");
  if (h0.min() <= settings.h_min) throw DegenerateGeometry("initial film thickness is below h_min");
  FlowState state;
  state.t = t0;
  state.eq = elasticity::solve_state(h0, settings.elastic);
  const auto geom = geometry::compute_geometry(h0);
  state.energy_surface = geometry::surface_integral(Field::Ones(h0.values.size()), geom);
  state.next_tau = settings.stepper.tau0;
  state.last_step.coupling_iters = 0;
  return state;
}

FlowState step_coupled(const FlowState& state, const FlowSettings& settings) {
  const double tau = state.next_tau > 0.0 ? state.next_tau : settings.stepper.tau0;
  return advance(state, settings, tau, true);
}

FlowState step_coupled(const FlowState& state, const FlowSettings& settings, double tau) {
  FlowState next = advance(state, settings, tau, false);
  next.next_tau = state.next_tau;
  return next;
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::pinch_off: return "pinch-off";
    case RunStatus::solver_failure: return "solver-failure";
  }
  return "unknown";
}

Trajectory run(const HeightField& initial, const FlowSettings& settings, double t_end,
               const CheckpointPolicy& policy, double d_ref) {
  if (!(t_end >= 0.0)) throw InvalidInput("run: t_end must be non-negative");
  if (policy.every < 1) throw InvalidInput("run: checkpoint_every must be >= 1");
  const double sigma = settings.stepper.sigma;
  Trajectory traj;
  FlowState state = initial_state(initial, settings);
  int checkpoint = 0;
  auto emit = [&](const FlowState& s) {
    traj.rows.push_back(diagnostics::make_row(s.t, s.eq, sigma, d_ref, s.last_step.tau, s.last_step.coupling_iters));
    if (policy.on_checkpoint) policy.on_checkpoint(s, checkpoint);
    ++checkpoint;
  };
  emit(state);

  const double t_eps = 1e-12 * std::max(1.0, t_end);
  bool last_emitted = true;
  try {
    while (state.t < t_end - t_eps) {
      const double remaining = t_end - state.t;
      if (state.next_tau >= remaining) {
        state = step_coupled(state, settings, remaining);
        state.t = t_end;
      } else {
        state = step_coupled(state, settings);
      }
      ++traj.steps;
      last_emitted = traj.steps % policy.every == 0;
      if (last_emitted) emit(state);
    }
  } catch (const PinchOff& e) {
    traj.status = RunStatus::pinch_off;
    traj.message = e.what();
  } catch (const SolverFailure& e) {
    traj.status = RunStatus::solver_failure;
    traj.message = e.what();
  }
  if (!last_emitted) emit(state);
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace elastoflow::flow
