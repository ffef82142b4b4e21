// Acceptance experiments. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include "elastoflow/diagnostics.hpp"
#include "elastoflow/elasticity.hpp"
#include "elastoflow/flow.hpp"
#include "elastoflow/geometry.hpp"
#include "elastoflow/io.hpp"
#include "elastoflow/spectral.hpp"
#include "elastoflow/stability.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace elastoflow;
using testing_support::kTwoPi;

namespace {

// Pinned tolerances.
constexpr double kAffineTol = 1e-6;
constexpr double kTraceConstTol = 1e-8;
constexpr double kAffineSeconds = 10.0;
constexpr double kStationarityTol = 1e-8;
constexpr double kFlatDriftTol = 1e-10;
constexpr double kVolumeTol = 1e-8;
constexpr double kEnergySlack = 1e-10;
constexpr double kBalanceTol = 0.05;
constexpr double kRateTol = 0.02;
constexpr double kRateSeconds = 30.0;
constexpr double kFitR2 = 0.99;
constexpr int kLyapunovBurnIn = 10;
constexpr double kFdRelTol = 1e-3;
constexpr double kFdAbsTol = 1e-6;
constexpr double kIdentityTol = 0.05;
constexpr double kThresholdRefineTol = 0.02;
constexpr double kCalculusTol = 1e-8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

elasticity::ElasticSetup setup_for(double e0, int m = 16, double lambda = 1.0, double mu = 1.0) {
  elasticity::ElasticSetup s;
  s.tensor = elasticity::ElasticTensor::isotropic(lambda, mu);
  s.e0 = e0;
  s.m = m;
  return s;
}

flow::FlowSettings flow_for(double e0, double tau, double d, int m = 16) {
  flow::FlowSettings s;
  s.elastic = setup_for(e0, m);
  s.stepper.tau0 = tau;
  s.stepper.tau_min = std::min(1e-12, tau);
  s.stepper.tau_max = std::max(1e-3, tau);
  s.h_min = 1e-3 * d;
  return s;
}

HeightField perturbed(const Grid& g, double d, int band, std::uint64_t seed, double amplitude) {
  Field bump = testing_support::random_field(g, band, seed);
  bump *= amplitude / bump.cwiseAbs().maxCoeff();
  return HeightField(g, (Field::Constant(bump.size(), d) + bump).eval());
}

double l2_from(const HeightField& h, double d) { return std::sqrt(cell_mean((h.values.array() - d).square().matrix())); }

/// Least-squares line through (x, y); returns slope and r^2.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  return {cov / vx, cov * cov / (vx * vy)};
}

double affine_error(const elasticity::BulkDisplacement& u, double d, double c) {
  const int vert = u.bulk_dim() - 1;
  double err = 0.0, ref = 0.0;
  for (Eigen::Index lat = 0; lat < u.lateral_count(); ++lat)
    for (int layer = 0; layer < u.m; ++layer) {
      Eigen::Vector3d expected = Eigen::Vector3d::Zero();
      expected[vert] = c * u.layer_coordinate(layer) * d;
      err += (u.fluctuation_at(lat, layer) - expected).squaredNorm();
      ref += expected.squaredNorm();
    }
  return std::sqrt(err / ref);
}

Outcome criterion_affine() {
  const double d = 0.1, e0 = 0.05, lambda = 1.3, mu = 0.8;
  bool pass = true;
  std::string detail;
  for (int bulk_dim : {2, 3}) {
    const auto start = std::chrono::steady_clock::now();
    const Grid g(bulk_dim - 1, bulk_dim == 2 ? 256 : 32);
    const auto setup = setup_for(e0, 16, lambda, mu);
    const HeightField h = HeightField::constant(g, d);
    const auto u = elasticity::solve_equilibrium(h, setup);
    const auto trace = elasticity::boundary_traces(u, h, setup.tensor);
    const double seconds = seconds_since(start);
    const double c = bulk_dim == 2 ? -lambda * e0 / (lambda + 2 * mu) : -2 * lambda * e0 / (lambda + 2 * mu);
    const double err = affine_error(u, d, c);
    const double q_star = elasticity::flat_film_energy_density(setup.tensor, e0, bulk_dim);
    const double spread = (trace.q.array() - q_star).abs().maxCoeff() / q_star;
    pass = pass && err <= kAffineTol && spread <= kTraceConstTol && seconds < kAffineSeconds;
    detail += "dim " + std::to_string(bulk_dim) + ": err " + fmt(err) + ", Q spread " + fmt(spread) + ", " +
              fmt(seconds) + " s; ";
  }
  return {pass, detail};
}

Outcome criterion_flat_stationarity() {
  const Grid g(1, 256);
  const double d = 0.1;
  const auto s = flow_for(0.5, 1e-6, d);
  auto state = flow::initial_state(HeightField::constant(g, d), s);
  const double residual = diagnostics::stationarity_residual(state.h(), state.eq.trace, 1.0);
  const double before = l2_from(state.h(), d);
  for (int i = 0; i < 100; ++i) state = flow::step_coupled(state, s);
  const double change = std::abs(l2_from(state.h(), d) - before);
  return {residual <= kStationarityTol && change <= kFlatDriftTol,
          "residual " + fmt(residual) + ", ||h-d|| change " + fmt(change)};
}

Outcome criterion_volume() {
  const Grid g(1, 256);
  const double d = 0.1;
  const auto s = flow_for(0.3, 1e-6, d);
  auto state = flow::initial_state(perturbed(g, d, 4, 11, 1e-3), s);
  const double v0 = flow::volume(state.h());
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    state = flow::step_coupled(state, s);
    worst = std::max(worst, std::abs(flow::volume(state.h()) - v0) / v0);
  }
  return {worst <= kVolumeTol, "max relative drift " + fmt(worst) + " over 1000 steps"};
}

Outcome criterion_dissipation() {
  const Grid g(1, 256);
  const double d = 0.02, tau = 1e-6;
  const auto s = flow_for(0.5, tau, d);
  auto state = flow::initial_state(perturbed(g, d, 2, 5, 1e-3), s);
  double max_increase = -1e300, max_balance = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto next = flow::step_coupled(state, s);
    const double dJ = flow::flow_energy(next, 1.0) - flow::flow_energy(state, 1.0);
    const double lyap = diagnostics::lyapunov(state.h(), state.eq.trace, 1.0);
    max_increase = std::max(max_increase, dJ);
    max_balance = std::max(max_balance, std::abs(dJ + next.last_step.tau * lyap) / (next.last_step.tau * lyap));
    state = next;
  }
  return {max_increase <= kEnergySlack && max_balance <= kBalanceTol,
          "max dJ " + fmt(max_increase) + ", max balance defect " + fmt(max_balance)};
}

Outcome criterion_surface_diffusion_rate() {
  const auto start = std::chrono::steady_clock::now();
  const Grid g(1, 256);
  const double d = 0.1, eps = 1e-4, tau = 1e-6;
  const auto s = flow_for(0.0, tau, d);
  const HeightField h0(g, g.sample([&](double x, double) { return d + eps * std::sin(kTwoPi * x); }));
  auto state = flow::initial_state(h0, s);
  std::vector<double> t, log_amp;
  for (int i = 0; i <= 1000; ++i) {
    if (i % 50 == 0) {
      t.push_back(state.t);
      log_amp.push_back(std::log(l2_from(state.h(), d)));
    }
    if (i < 1000) state = flow::step_coupled(state, s);
  }
  const double rate = -linear_fit(t, log_amp).first;
  const double expected = std::pow(kTwoPi, 4);
  const double rel = std::abs(rate - expected) / expected;
  const double seconds = seconds_since(start);
  return {rel <= kRateTol && seconds < kRateSeconds,
          "rate " + fmt(rate) + " vs " + fmt(expected) + " (rel " + fmt(rel) + "), " + fmt(seconds) + " s"};
}

Outcome criterion_exponential_stability() {
  const Grid g(1, 256);
  const double d = 0.02;
  auto s = flow_for(0.1, 1e-6, d);
  s.stepper.adaptivity = flow::Adaptivity::energy;
  s.stepper.tau_max = 2e-5;
  flow::CheckpointPolicy policy;
  policy.every = 1;
  const auto traj = flow::run(perturbed(g, d, 4, 23, 1e-3), s, 3e-3, policy, d);
  if (traj.status != flow::RunStatus::completed) return {false, "run ended early: " + traj.message};
  std::vector<double> t, log_dev;
  for (std::size_t i = traj.rows.size() / 2; i < traj.rows.size(); ++i) {
    t.push_back(traj.rows[i].t);
    log_dev.push_back(std::log(std::sqrt(2.0 * traj.rows[i].d_distance)));
  }
  const auto [slope, r2] = linear_fit(t, log_dev);
  std::size_t last_increase = 0;
  for (std::size_t i = 1; i < traj.rows.size(); ++i)
    if (!(traj.rows[i].lyapunov < traj.rows[i - 1].lyapunov)) last_increase = i;
  return {r2 > kFitR2 && last_increase <= static_cast<std::size_t>(kLyapunovBurnIn),
          "tail rate " + fmt(-slope) + ", r2 " + fmt(r2) + ", lyapunov monotone from step " +
              std::to_string(last_increase) + " of " + std::to_string(traj.rows.size() - 1)};
}

Outcome criterion_second_variation_fd() {
  const Grid g(1, 256);
  const double d = 0.1, eps = 1e-3;
  auto setup = setup_for(0.05);
  setup.solver.tolerance = 1e-13;
  const auto eq = elasticity::solve_state(HeightField::constant(g, d), setup);
  auto energy = [&](const Field& phi, double t) {
    const HeightField h(g, (Field::Constant(phi.size(), d) + t * phi).eval());
    const auto geom = geometry::compute_geometry(h);
    return geometry::surface_integral(Field::Ones(phi.size()), geom) + elasticity::solve_state(h, setup).bulk_energy;
  };
  const double base = energy(Field::Zero(256), 0.0);
  bool pass = true;
  double worst = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const Field phi = g.sample([&](double x, double) { return std::cos(kTwoPi * k * x); });
    const double analytic = stability::second_variation_apply(phi, eq, setup, 1.0).total;
    const double fd = (energy(phi, eps) + energy(phi, -eps) - 2.0 * base) / (eps * eps);
    const double err = std::abs(analytic - fd);
    pass = pass && err <= std::max(kFdRelTol * std::abs(analytic), kFdAbsTol);
    worst = std::max(worst, err / std::abs(analytic));
  }
  return {pass, "max relative deviation " + fmt(worst) + " over k = 1..8"};
}

Outcome criterion_energy_identity() {
  const Grid g(1, 256);
  const double d = 0.02;
  const HeightField h0 = perturbed(g, d, 2, 5, 1e-3);
  std::vector<double> mismatch;
  std::string detail;
  for (double tau : {1e-6, 5e-7, 2.5e-7}) {
    const auto s = flow_for(0.5, tau, d);
    auto state = flow::initial_state(h0, s);
    const diagnostics::IdentitySnapshot a{state.t, 0.0, state.eq};
    state = flow::step_coupled(state, s, tau);
    const diagnostics::IdentitySnapshot b{state.t, tau, state.eq};
    state = flow::step_coupled(state, s, tau);
    const diagnostics::IdentitySnapshot c{state.t, tau, state.eq};
    mismatch.push_back(diagnostics::energy_identity_check(a, b, c, s.elastic, 1.0).mismatch);
    detail += "tau " + fmt(tau) + ": " + fmt(mismatch.back()) + "; ";
  }
  const bool pass = mismatch[0] <= kIdentityTol && mismatch[1] < mismatch[0] && mismatch[2] < mismatch[1];
  return {pass, detail};
}

Outcome criterion_threshold() {
  std::vector<double> d_list;
  for (int i = 0; i < 10; ++i) d_list.push_back(0.005 * std::pow(100.0, i / 9.0));
  const auto setup = setup_for(2.0);
  std::vector<stability::ScanResult> scans;
  for (int n : {128, 256}) {
    const Grid g(1, n);
    scans.push_back(stability::flat_scan(d_list, g, setup, 1.0, stability::default_cutoff(g)));
  }
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const auto& sc = scans[i];
    pass = pass && sc.rows.front().min_eig_h1 > 0.0 && sc.rows.back().min_eig_h1 < 0.0 && sc.sign_changes == 1 &&
           sc.bracket.has_value();
    detail += "n " + std::to_string(i == 0 ? 128 : 256) + ": changes " + std::to_string(sc.sign_changes);
    if (sc.d0_estimate) detail += ", d0 " + fmt(*sc.d0_estimate);
    detail += "; ";
  }
  pass = pass && scans[0].bracket && scans[1].bracket && *scans[0].bracket == *scans[1].bracket;

  // Vertical refinement of the coarse lateral grid as the fine-mesh reference for d0.
  const Grid coarse(1, 128);
  const auto fine = stability::flat_scan(d_list, coarse, setup_for(2.0, 32), 1.0, stability::default_cutoff(coarse));
  if (fine.d0_estimate && scans[0].d0_estimate) {
    const double rel = std::abs(*scans[0].d0_estimate - *fine.d0_estimate) / *fine.d0_estimate;
    detail += "fine-mesh d0 " + fmt(*fine.d0_estimate) + " (rel " + fmt(rel) + ")";
    pass = pass && rel <= kThresholdRefineTol;
  } else {
    pass = false;
    detail += "fine-mesh scan has no single sign change";
  }
  return {pass, detail};
}

/// Non-Nyquist trigonometric polynomials; the smallest positive generalized eigenvalue of
/// the Dirichlet form against the L2(Gamma) mass gives the Poincare constant 1/sqrt(lambda1).
double poincare_constant(const geometry::SurfaceGeometry& geom) {
  const Grid& g = geom.grid;
  const int kmax = g.n() / 2 - 1;
  const int k2max = g.surface_dim() == 2 ? kmax : 0;
  std::vector<Field> basis{Field::Ones(static_cast<Eigen::Index>(g.size()))};
  for (int k1 = 0; k1 <= kmax; ++k1)
    for (int k2 = -k2max; k2 <= k2max; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      basis.push_back(g.sample([&](double x, double y) { return std::cos(kTwoPi * (k1 * x + k2 * y)); }));
      basis.push_back(g.sample([&](double x, double y) { return std::sin(kTwoPi * (k1 * x + k2 * y)); }));
    }
  const auto nb = static_cast<Eigen::Index>(basis.size());
  std::vector<geometry::ComponentField> grads;
  for (const auto& b : basis) grads.push_back(geometry::raise_index(geometry::gradient(b, g), geom));
  Eigen::MatrixXd stiff(nb, nb), mass(nb, nb);
  for (Eigen::Index a = 0; a < nb; ++a)
    for (Eigen::Index b = a; b < nb; ++b) {
      stiff(a, b) = stiff(b, a) =
          geometry::surface_integral(geometry::pair(geometry::gradient(basis[a], g), grads[b]), geom);
      mass(a, b) = mass(b, a) = geometry::surface_integral(basis[a].cwiseProduct(basis[b]), geom);
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(stiff, mass, Eigen::EigenvaluesOnly);
  return 1.0 / std::sqrt(eig.eigenvalues()[1]);
}

Outcome criterion_discrete_calculus() {
  int failures = 0;
  double worst_ibp = 0.0, worst_poincare = -1.0;
  for (int draw = 0; draw < 100; ++draw) {
    const int dim = draw % 2 == 0 ? 1 : 2;
    const Grid g(dim, dim == 1 ? 32 : 12);
    const auto seed = static_cast<std::uint64_t>(1000 + 10 * draw);
    const HeightField h = perturbed(g, 0.3, 2, seed, 0.01 + 0.002 * (draw % 10));
    const auto geom = geometry::compute_geometry(h);
    const int band = g.n() / 2 - 1;
    const Field f = testing_support::random_field(g, band, seed + 1);
    geometry::ComponentField X(dim);
    double x_norm2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      X[i] = testing_support::random_field(g, band, seed + 2 + i);
      x_norm2 += geometry::surface_integral(X[i].cwiseAbs2(), geom);
    }
    const Field grad2 = geometry::tangential_gradient_squared(f, geom);
    const double grad_norm = std::sqrt(geometry::surface_integral(grad2, geom));

    const double ibp = geometry::surface_integral(geometry::pair(geometry::gradient(f, g), X), geom) +
                       geometry::surface_integral(f.cwiseProduct(geometry::divergence(X, geom)), geom);
    double rel_ibp = std::abs(ibp) / (grad_norm * std::sqrt(x_norm2));
    const Field lap = geometry::laplace_beltrami(f, geom);
    const double dirichlet = -geometry::surface_integral(f.cwiseProduct(lap), geom);
    rel_ibp = std::max(rel_ibp, std::abs(dirichlet - grad_norm * grad_norm) / (grad_norm * grad_norm));

    const double C = poincare_constant(geom);
    const Field centred = (f.array() - geometry::surface_mean(f, geom)).matrix();
    const double lhs1 = geometry::surface_l2_norm(centred, geom);
    const double lap_norm = geometry::surface_l2_norm(lap, geom);
    const double excess = std::max(lhs1 / (C * grad_norm), grad_norm / (C * lap_norm)) - 1.0;

    worst_ibp = std::max(worst_ibp, rel_ibp);
    worst_poincare = std::max(worst_poincare, excess);
    if (rel_ibp > kCalculusTol || excess > kCalculusTol) ++failures;
  }
  return {failures == 0, "failures " + std::to_string(failures) + "/100, worst IBP " + fmt(worst_ibp) +
                             ", worst Poincare ratio - 1 " + fmt(worst_poincare)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"flat-film elasticity oracle", criterion_affine},
      {"flat-film stationarity", criterion_flat_stationarity},
      {"volume preservation", criterion_volume},
      {"energy dissipation", criterion_dissipation},
      {"surface diffusion decay rate", criterion_surface_diffusion_rate},
      {"exponential stability", criterion_exponential_stability},
      {"second variation vs finite differences", criterion_second_variation_fd},
      {"energy identity", criterion_energy_identity},
      {"stability threshold scan", criterion_threshold},
      {"discrete calculus invariants", criterion_discrete_calculus},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    const auto start = std::chrono::steady_clock::now();
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                outcome.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
