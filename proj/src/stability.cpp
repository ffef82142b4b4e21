#include "elastoflow/stability.hpp"

#include "elastoflow/diagnostics.hpp"
#include "elastoflow/error.hpp"
#include "elastoflow/geometry.hpp"
#include "elastoflow/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace elastoflow::stability {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_zero_mean(const Field& psi, const geometry::SurfaceGeometry& geom) {
  const double mean = geometry::surface_integral(psi, geom);
  const double scale = geometry::surface_l2_norm(psi, geom);
  if (std::abs(mean) > 1e-8 * std::max(scale, 1e-300) && std::abs(mean) > 1e-14) {
    throw InvalidInput("second variation: psi must have zero surface mean (got " + std::to_string(mean) + ")");
  }
}

}  // namespace

std::vector<FourierMode> fourier_basis(const Grid& grid, int cutoff) {
  if (cutoff < 1) throw InvalidInput("fourier_basis: cutoff must be >= 1");
  if (3 * cutoff > grid.n()) {
    throw InvalidInput("fourier_basis: cutoff " + std::to_string(cutoff) + " exceeds n/3 = " +
                       std::to_string(grid.n() / 3));
  }
  std::vector<FourierMode> basis;
  if (grid.surface_dim() == 1) {
    for (int k = 1; k <= cutoff; ++k) {
      basis.push_back({k, 0, true});
      basis.push_back({k, 0, false});
    }
    return basis;
  }
  for (int k1 = 0; k1 <= cutoff; ++k1)
    for (int k2 = -cutoff; k2 <= cutoff; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      basis.push_back({k1, k2, true});
      basis.push_back({k1, k2, false});
    }
  return basis;
}

Field mode_values(const Grid& grid, const FourierMode& mode) {
  return grid.sample([&](double x1, double x2) {
    const double phase = kTwoPi * (mode.k1 * x1 + mode.k2 * x2);
    return mode.cosine ? std::cos(phase) : std::sin(phase);
  });
}

int default_cutoff(const Grid& grid) { return std::max(1, grid.n() / 4); }

SecondVariationTerms second_variation_apply(const Field& psi, const elasticity::Equilibrium& eq,
                                            const elasticity::ElasticSetup& setup, double sigma) {
  require_field_size(eq.h.grid, psi, "second_variation_apply");
  const auto geom = geometry::compute_geometry(eq.h);
  require_zero_mean(psi, geom);

  SecondVariationTerms terms;
  const Field B2 = geometry::second_fundamental_norm_squared(geom);
  terms.surface = geometry::surface_integral(
      geometry::tangential_gradient_squared(psi, geom) - B2.cwiseProduct(psi.cwiseAbs2()), geom);
  terms.elastic_normal = geometry::surface_integral(eq.trace.dq_dn.cwiseProduct(psi.cwiseAbs2()), geom);
  if (eq.u.e0 != 0.0) {
    elasticity::StripOperator op(eq.h, setup.tensor, eq.u.m);
    elasticity::SolveStats stats;
    const Eigen::VectorXd x = op.solve(op.linearized_load(psi, eq.u), setup.solver, nullptr, stats);
    terms.elastic_bulk = -2.0 * op.quadratic_energy(x);
  }
  terms.total = terms.surface + sigma * (terms.elastic_bulk + terms.elastic_normal);
  return terms;
}

QuadraticFormAssembly assemble_quadratic_form(const elasticity::Equilibrium& eq,
                                              const elasticity::ElasticSetup& setup, double sigma,
                                              int cutoff) {
  const Grid& grid = eq.h.grid;
  QuadraticFormAssembly out;
  out.basis = fourier_basis(grid, cutoff);
  const auto count = static_cast<Eigen::Index>(out.basis.size());
  const auto geom = geometry::compute_geometry(eq.h);
  const Field B2 = geometry::second_fundamental_norm_squared(geom);

  std::vector<Field> psi(out.basis.size());
  std::vector<geometry::ComponentField> grad(out.basis.size());
  for (std::size_t a = 0; a < out.basis.size(); ++a) {
    psi[a] = mode_values(grid, out.basis[a]).cwiseQuotient(geom.J);
    grad[a] = geometry::gradient(psi[a], grid);
  }

  out.form.setZero(count, count);
  out.mass_l2.setZero(count, count);
  out.mass_h1.setZero(count, count);
  const int dim = grid.surface_dim();
  for (Eigen::Index a = 0; a < count; ++a)
    for (Eigen::Index b = a; b < count; ++b) {
      Field metric = Field::Zero(static_cast<Eigen::Index>(grid.size()));
      for (Eigen::Index p = 0; p < metric.size(); ++p)
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) metric[p] += geom.g_inv[p](i, j) * grad[a][i][p] * grad[b][j][p];
      const Field prod = psi[a].cwiseProduct(psi[b]);
      const double l2 = geometry::surface_integral(prod, geom);
      const double dirichlet = geometry::surface_integral(metric, geom);
      const double curvature = geometry::surface_integral(B2.cwiseProduct(prod), geom);
      const double normal = geometry::surface_integral(eq.trace.dq_dn.cwiseProduct(prod), geom);
      out.mass_l2(a, b) = out.mass_l2(b, a) = l2;
      out.mass_h1(a, b) = out.mass_h1(b, a) = dirichlet + l2;
      out.form(a, b) = out.form(b, a) = dirichlet - curvature + sigma * normal;
    }

  if (eq.u.e0 != 0.0) {
    elasticity::StripOperator op(eq.h, setup.tensor, eq.u.m);
    std::vector<Eigen::VectorXd> solutions(out.basis.size());
    parallel_for(out.basis.size(), [&](std::size_t a) {
      elasticity::SolveStats stats;
      solutions[a] = op.solve(op.linearized_load(psi[a], eq.u), setup.solver, nullptr, stats);
    });
    std::vector<Eigen::VectorXd> applied(out.basis.size());
    for (std::size_t a = 0; a < out.basis.size(); ++a) applied[a] = op.stiffness() * solutions[a];
    for (Eigen::Index a = 0; a < count; ++a)
      for (Eigen::Index b = a; b < count; ++b) {
        // -2 int Q(E(u_a + u_b)) polarized: - int C E(u_a) : E(u_b).
        const double bulk = -0.5 * (solutions[a].dot(applied[b]) + solutions[b].dot(applied[a]));
        out.form(a, b) += sigma * bulk;
        if (b != a) out.form(b, a) += sigma * bulk;
      }
  }
  return out;
}

StabilityReport analyze(const QuadraticFormAssembly& form, double stationarity_residual,
                        double stationarity_tol) {
  StabilityReport report;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> l2(form.form, form.mass_l2,
                                                               Eigen::EigenvaluesOnly);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> h1(form.form, form.mass_h1,
                                                               Eigen::EigenvaluesOnly);
  if (l2.info() != Eigen::Success || h1.info() != Eigen::Success) {
    throw SolverFailure("stability: generalized eigensolve failed", 0.0, 0);
  }
  report.min_eig_l2 = l2.eigenvalues().minCoeff();
  report.min_eig_h1 = h1.eigenvalues().minCoeff();
  const Eigen::Index head = std::min<Eigen::Index>(8, h1.eigenvalues().size());
  for (Eigen::Index i = 0; i < head; ++i) report.spectrum_head.push_back(h1.eigenvalues()[i]);
  report.stationarity_residual = stationarity_residual;
  report.is_stationary = stationarity_residual <= stationarity_tol;
  report.inconclusive = std::abs(report.min_eig_h1) <= kStrictnessThreshold;
  report.is_strictly_stable = report.is_stationary && report.min_eig_h1 > kStrictnessThreshold;
  return report;
}

StabilityReport min_eigenvalue(const elasticity::Equilibrium& eq, const elasticity::ElasticSetup& setup,
                               double sigma, int cutoff, double stationarity_tol) {
  const auto form = assemble_quadratic_form(eq, setup, sigma, cutoff);
  const double residual = diagnostics::stationarity_residual(eq.h, eq.trace, sigma);
  return analyze(form, residual, stationarity_tol);
}

ScanResult flat_scan(const std::vector<double>& d_list, const Grid& grid,
                     const elasticity::ElasticSetup& setup, double sigma, int cutoff) {
  if (d_list.empty()) throw InvalidInput("flat_scan: empty thickness list");
  std::vector<double> ds = d_list;
  std::sort(ds.begin(), ds.end());
  ScanResult result;
  for (double d : ds) {
    if (!(d > 0.0)) throw InvalidInput("flat_scan: thickness must be positive");
    const auto eq = elasticity::solve_state(HeightField::constant(grid, d), setup);
    const auto form = assemble_quadratic_form(eq, setup, sigma, cutoff);
    const auto report = analyze(form, 0.0);
    result.rows.push_back({d, report.min_eig_l2, report.min_eig_h1});
  }
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    const double a = result.rows[i - 1].min_eig_h1;
    const double b = result.rows[i].min_eig_h1;
    if ((a > 0.0) != (b > 0.0)) {
      ++result.sign_changes;
      result.bracket = std::make_pair(result.rows[i - 1].d, result.rows[i].d);
      const double t = a / (a - b);
      result.d0_estimate = result.rows[i - 1].d + t * (result.rows[i].d - result.rows[i - 1].d);
    }
  }
  if (result.sign_changes != 1) {
    result.bracket.reset();
    result.d0_estimate.reset();
  }
  return result;
}

bool is_stationary(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma, double tol) {
  return diagnostics::stationarity_residual(h, trace, sigma) <= tol;
}

}  // namespace elastoflow::stability
