#include "elastoflow/cli.hpp"

#include "elastoflow/config.hpp"
#include "elastoflow/diagnostics.hpp"
#include "elastoflow/error.hpp"
#include "elastoflow/flow.hpp"
#include "elastoflow/geometry.hpp"
#include "elastoflow/io.hpp"
#include "elastoflow/parallel.hpp"
#include "elastoflow/stability.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace elastoflow::cli {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON configuration file")->required();
  cmd->add_option("--out", opts.out_dir, "Output directory (overrides output.dir)");
  cmd->add_option("--seed", opts.seed, "Seed for random perturbations");
  cmd->add_option("--threads", opts.threads, "Worker threads (overrides ELASTOFLOW_THREADS)")
      ->check(CLI::PositiveNumber);
}

config::SimConfig prepare(const CommonOptions& opts) {
  config::SimConfig cfg = config::load(opts.config_path);
  if (!opts.out_dir.empty()) cfg.output.dir = opts.out_dir;
  if (opts.seed) cfg.perturbation.seed = *opts.seed;
  if (opts.threads) set_thread_count(*opts.threads);
  std::error_code ec;
  fs::create_directories(cfg.output.dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.output.dir + "': " + ec.message());
  return cfg;
}

std::string path_in(const config::SimConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output.dir) / name).string();
}

int cmd_simulate(const CommonOptions& opts, std::ostream& out) {
  const auto cfg = prepare(opts);
  const auto settings = config::flow_settings(cfg);
  const HeightField h0 = config::initial_height(cfg);
  flow::CheckpointPolicy policy;
  policy.every = cfg.output.checkpoint_every;
  policy.on_checkpoint = [&](const flow::FlowState& s, int index) {
    io::write_height(path_in(cfg, io::checkpoint_name(index)), s.h(), s.t);
  };
  const auto traj = flow::run(h0, settings, cfg.t_end, policy, cfg.d);
  io::write_trajectory_csv(path_in(cfg, "trajectory.csv"), traj.rows);
  io::write_height(path_in(cfg, "final.bin"), traj.final_state.h(), traj.final_state.t);

  const auto& last = traj.rows.back();
  out << "status: " << flow::to_string(traj.status) << '\n'
      << "steps: " << traj.steps << '\n'
      << "t: " << io::format_double(traj.final_state.t) << '\n'
      << "energy_total: " << io::format_double(last.energy_total) << '\n'
      << "h_dev_l2: " << io::format_double(last.h_dev_l2) << '\n'
      << "volume drift: " << io::format_double(std::abs(last.volume - traj.rows.front().volume)) << '\n';
  if (!traj.message.empty()) out << "message: " << traj.message << '\n';
  switch (traj.status) {
    case flow::RunStatus::completed: return kOk;
    case flow::RunStatus::pinch_off: return kPinchOff;
    case flow::RunStatus::solver_failure: return kSolverFailure;
  }
  return kRuntimeError;
}

int cmd_flat_scan(const CommonOptions& opts, std::ostream& out) {
  const auto cfg = prepare(opts);
  if (cfg.scan.d_list.empty()) throw ConfigError("config.scan.d_list: required for flat-scan");
  const Grid grid = cfg.grid();
  const int cutoff = cfg.scan.cutoff > 0 ? cfg.scan.cutoff : stability::default_cutoff(grid);
  const auto result = stability::flat_scan(cfg.scan.d_list, grid, config::elastic_setup(cfg), cfg.sigma, cutoff);
  io::write_scan_csv(path_in(cfg, "scan.csv"), result.rows);
  for (const auto& row : result.rows) {
    out << "d = " << io::format_double(row.d) << "  min_eig_H1 = " << io::format_double(row.min_eig_h1) << '\n';
  }
  out << "sign changes: " << result.sign_changes << '\n';
  if (result.bracket) {
    out << "bracket: [" << io::format_double(result.bracket->first) << ", "
        << io::format_double(result.bracket->second) << "]\n"
        << "d0 estimate: " << io::format_double(*result.d0_estimate) << '\n';
  }
  return kOk;
}

int cmd_second_variation(const CommonOptions& opts, std::ostream& out) {
  const auto cfg = prepare(opts);
  const auto setup = config::elastic_setup(cfg);
  const HeightField h = config::initial_height(cfg);
  elasticity::require_film(h, cfg.effective_h_min());
  const auto eq = elasticity::solve_state(h, setup);
  const auto geom = geometry::compute_geometry(h);
  const stability::FourierMode mode{cfg.psi.k1, cfg.psi.k2, cfg.psi.cosine};
  const Field psi = stability::mode_values(h.grid, mode).cwiseQuotient(geom.J);
  const auto terms = stability::second_variation_apply(psi, eq, setup, cfg.sigma);
  const double residual = diagnostics::stationarity_residual(h, eq.trace, cfg.sigma);

  std::ofstream csv(path_in(cfg, "second_variation.csv"));
  if (!csv) throw Error("cannot write second_variation.csv");
  csv << "k1,k2,kind,surface,elastic_bulk,elastic_normal,total,stationarity_residual\n"
      << mode.k1 << ',' << mode.k2 << ',' << (mode.cosine ? "cos" : "sin") << ','
      << io::format_double(terms.surface) << ',' << io::format_double(terms.elastic_bulk) << ','
      << io::format_double(terms.elastic_normal) << ',' << io::format_double(terms.total) << ','
      << io::format_double(residual) << '\n';

  out << "mode: (" << mode.k1 << ", " << mode.k2 << ") " << (mode.cosine ? "cos" : "sin") << '\n'
      << "surface: " << io::format_double(terms.surface) << '\n'
      << "elastic bulk: " << io::format_double(terms.elastic_bulk) << '\n'
      << "elastic normal: " << io::format_double(terms.elastic_normal) << '\n'
      << "second variation: " << io::format_double(terms.total) << '\n'
      << "stationarity residual: " << io::format_double(residual) << '\n';
  return kOk;
}

int cmd_energy_identity(const CommonOptions& opts, std::ostream& out) {
  const auto cfg = prepare(opts);
  auto settings = config::flow_settings(cfg);
  settings.stepper.adaptivity = flow::Adaptivity::fixed;
  const HeightField h0 = config::initial_height(cfg);

  std::ofstream csv(path_in(cfg, "identity.csv"));
  if (!csv) throw Error("cannot write identity.csv");
  csv << "tau,t,lhs,rhs,mismatch\n";
  for (int r = 0; r <= cfg.energy_identity.refinements; ++r) {
    const double tau = cfg.energy_identity.tau / std::pow(2.0, r);
    settings.stepper.tau0 = tau;
    settings.stepper.tau_min = std::min(settings.stepper.tau_min, tau);
    settings.stepper.tau_max = std::max(settings.stepper.tau_max, tau);
    flow::FlowState state = flow::initial_state(h0, settings);
    const long warmup = std::lround(cfg.energy_identity.start_time / tau);
    for (long i = 0; i < warmup; ++i) state = flow::step_coupled(state, settings, tau);
    diagnostics::IdentitySnapshot prev{state.t, tau, state.eq};
    state = flow::step_coupled(state, settings, tau);
    diagnostics::IdentitySnapshot mid{state.t, tau, state.eq};
    state = flow::step_coupled(state, settings, tau);
    diagnostics::IdentitySnapshot next{state.t, tau, state.eq};
    const auto terms = diagnostics::energy_identity_check(prev, mid, next, settings.elastic, cfg.sigma);
    csv << io::format_double(tau) << ',' << io::format_double(mid.t) << ',' << io::format_double(terms.lhs) << ','
        << io::format_double(terms.rhs) << ',' << io::format_double(terms.mismatch) << '\n';
    out << "tau = " << io::format_double(tau) << "  lhs = " << io::format_double(terms.lhs)
        << "  rhs = " << io::format_double(terms.rhs) << "  mismatch = " << io::format_double(terms.mismatch)
        << '\n';
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surface diffusion with elasticity on periodic graph films"};
  app.require_subcommand(1);
  CommonOptions opts;
  auto* simulate = app.add_subcommand("simulate", "Integrate the coupled flow");
  auto* scan = app.add_subcommand("flat-scan", "Second-variation spectrum of flat films over a thickness list");
  auto* second = app.add_subcommand("second-variation", "Evaluate the second variation along one mode");
  auto* identity = app.add_subcommand("energy-identity", "Check the Lyapunov energy identity along a run");
  for (auto* cmd : {simulate, scan, second, identity}) add_common(cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*simulate) return cmd_simulate(opts, out);
    if (*scan) return cmd_flat_scan(opts, out);
    if (*second) return cmd_second_variation(opts, out);
    if (*identity) return cmd_energy_identity(opts, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const flow::PinchOff& e) {
    err << "pinch-off: " << e.what() << '\n';
    return kPinchOff;
  } catch (const DegenerateGeometry& e) {
    err << "degenerate geometry: " << e.what() << '\n';
    return kPinchOff;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}

}  // namespace elastoflow::cli
