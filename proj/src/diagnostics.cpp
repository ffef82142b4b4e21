#include "elastoflow/diagnostics.hpp"

#include "elastoflow/error.hpp"
#include "elastoflow/geometry.hpp"
#include "elastoflow/spectral.hpp"
#include "elastoflow/stability.hpp"

#include <cmath>
#include <string>

namespace elastoflow::diagnostics {

namespace {

void require_trace(const HeightField& h, const elasticity::ElasticTrace& trace) {
  require_field_size(h.grid, trace.q, "elastic trace");
  require_field_size(h.grid, trace.dq_dn, "elastic trace normal derivative");
}

}  // namespace

EnergyParts total_energy(const elasticity::Equilibrium& eq) {
  if (eq.u.heights.size() != eq.h.values.size() || eq.u.heights != eq.h.values) {
    throw GridMismatch("total_energy: displacement was solved for a different height field");
  }
  const auto geom = geometry::compute_geometry(eq.h);
  EnergyParts parts;
  parts.bulk = eq.bulk_energy;
  parts.surface = geometry::surface_integral(Field::Ones(eq.h.values.size()), geom);
  parts.total = parts.bulk + parts.surface;
  return parts;
}

Field chemical_potential(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma) {
  require_trace(h, trace);
  const auto geom = geometry::compute_geometry(h);
  return geom.H + sigma * trace.q;
}

double stationarity_residual(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma) {
  require_trace(h, trace);
  const auto geom = geometry::compute_geometry(h);
  const Field R = geom.H + sigma * trace.q;
  const double mean = geometry::surface_mean(R, geom);
  return geometry::surface_l2_norm(R.array() - mean, geom);
}

std::vector<double> component_means(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma) {
  require_trace(h, trace);
  const auto geom = geometry::compute_geometry(h);
  return {geometry::surface_mean(geom.H + sigma * trace.q, geom)};
}

double lyapunov(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma) {
  require_trace(h, trace);
  const auto geom = geometry::compute_geometry(h);
  const Field R = geom.H + sigma * trace.q;
  return geometry::surface_integral(geometry::tangential_gradient_squared(R, geom), geom);
}

double d_distance(const HeightField& h, double d_ref) {
  return 0.5 * cell_mean((h.values.array() - d_ref).square().matrix());
}

double h_deviation(const HeightField& h) {
  return std::sqrt(cell_mean((h.values.array() - h.mean()).square().matrix()));
}

double sobolev_seminorm(const HeightField& h, int k) {
  if (k < 0 || k > 3) throw InvalidInput("sobolev_seminorm: order must be in 0..3, got " + std::to_string(k));
  const auto& spectral = Spectral::for_grid(h.grid);
  const Coefficients c = spectral.forward(h.values);
  const int n = h.grid.n();
  const int dim = h.grid.surface_dim();
  // Parseval: sum_a C(k,a) |(2 pi k1)^a (2 pi k2)^(k-a) c|^2 = |2 pi k|^(2k) |c|^2.
  double sum = 0.0;
  for (std::size_t idx = 0; idx < c.size(); ++idx) {
    const int i1 = dim == 1 ? static_cast<int>(idx) : static_cast<int>(idx) / n;
    const int i2 = dim == 1 ? 0 : static_cast<int>(idx) % n;
    const bool nyq = h.grid.is_nyquist(i1) || (dim == 2 && h.grid.is_nyquist(i2));
    if (k % 2 == 1 && nyq) continue;
    const double k1 = 2.0 * M_PI * h.grid.wavenumber(i1);
    const double k2 = dim == 2 ? 2.0 * M_PI * h.grid.wavenumber(i2) : 0.0;
    sum += std::pow(k1 * k1 + k2 * k2, k) * std::norm(c[idx]);
  }
  return std::sqrt(sum);
}

DiagnosticsRow make_row(double t, const elasticity::Equilibrium& eq, double sigma, double d_ref, double tau,
                        int coupling_iters) {
  DiagnosticsRow row;
  const auto energy = total_energy(eq);
  row.t = t;
  row.volume = eq.h.mean();
  row.energy_bulk = energy.bulk;
  row.energy_surface = energy.surface;
  row.energy_total = energy.total;
  row.lyapunov = lyapunov(eq.h, eq.trace, sigma);
  row.stationarity_residual = stationarity_residual(eq.h, eq.trace, sigma);
  row.h_dev_l2 = h_deviation(eq.h);
  row.d_distance = d_distance(eq.h, d_ref);
  row.tau = tau;
  row.coupling_iters = coupling_iters;
  row.sobolev_h3 = sobolev_seminorm(eq.h, 3);
  return row;
}

IdentityTerms energy_identity_check(const IdentitySnapshot& prev, const IdentitySnapshot& mid,
                                    const IdentitySnapshot& next, const elasticity::ElasticSetup& setup,
                                    double sigma) {
  const double tau = mid.tau;
  if (!(tau > 0.0) || std::abs(next.tau - tau) > 1e-12 * tau) {
    throw InvalidInput("energy_identity_check: the window needs two steps of equal size");
  }
  require_same_grid(prev.eq.h.grid, mid.eq.h.grid, "energy_identity_check");
  require_same_grid(mid.eq.h.grid, next.eq.h.grid, "energy_identity_check");

  IdentityTerms terms;
  const double l_prev = lyapunov(prev.eq.h, prev.eq.trace, sigma);
  const double l_next = lyapunov(next.eq.h, next.eq.trace, sigma);
  terms.lhs = (l_next - l_prev) / (2.0 * tau);

  const auto geom = geometry::compute_geometry(mid.eq.h);
  const Field R = geom.H + sigma * mid.eq.trace.q;
  const Field lap_R = geometry::laplace_beltrami(R, geom);
  const Field grad_R2 = geometry::tangential_gradient_squared(R, geom);
  const Field B_grad = geometry::second_fundamental_form_on_gradient(R, geom);

  // Lap R has zero surface integral up to round-off; remove it before the zero-mean check.
  const Field psi = lap_R.array() - geometry::surface_mean(lap_R, geom);
  terms.second_variation = stability::second_variation_apply(psi, mid.eq, setup, sigma).total;
  terms.curvature_term = geometry::surface_integral(B_grad.cwiseProduct(lap_R), geom);
  terms.mean_curvature_term = geometry::surface_integral(geom.H.cwiseProduct(grad_R2).cwiseProduct(lap_R), geom);
  terms.rhs = -2.0 * terms.second_variation - 2.0 * terms.curvature_term + terms.mean_curvature_term;
  terms.mismatch = std::abs(terms.lhs - terms.rhs) / (std::abs(terms.rhs) + kMismatchFloor);
  return terms;
}

}  // namespace elastoflow::diagnostics
