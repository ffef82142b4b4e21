#pragma once

#include "elastoflow/elasticity.hpp"
#include "elastoflow/grid.hpp"

#include <vector>

namespace elastoflow::diagnostics {

struct EnergyParts {
  double bulk = 0.0;
  double surface = 0.0;
  double total = 0.0;
};

/// Bulk elastic energy plus surface area, per unit cell.
EnergyParts total_energy(const elasticity::Equilibrium& eq);

/// R = H + sigma * q.
Field chemical_potential(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma);

/// ||R - mean(R)||_{L2(Gamma)}, with the mean taken over the surface.
double stationarity_residual(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma);

/// Surface mean of R on each boundary component. A film has a single component.
std::vector<double> component_means(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma);

/// int_Gamma |grad_g R|^2 dmu.
double lyapunov(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma);

/// 1/2 int (h - d_ref)^2 dx over the cell.
double d_distance(const HeightField& h, double d_ref);

/// ||h - mean(h)||_{L2} over the cell.
double h_deviation(const HeightField& h);

/// sqrt(sum over multi-indices of order k of binomial-weighted ||d^alpha h||^2), k in 0..3.
double sobolev_seminorm(const HeightField& h, int k);

struct DiagnosticsRow {
  double t = 0.0;
  double volume = 0.0;
  double energy_bulk = 0.0;
  double energy_surface = 0.0;
  double energy_total = 0.0;
  double lyapunov = 0.0;
  double stationarity_residual = 0.0;
  double h_dev_l2 = 0.0;
  double d_distance = 0.0;
  double tau = 0.0;
  int coupling_iters = 0;
  double sobolev_h3 = 0.0;
};

DiagnosticsRow make_row(double t, const elasticity::Equilibrium& eq, double sigma, double d_ref, double tau,
                        int coupling_iters);

/// One checkpoint of an identity window: the state and the step that produced it.
struct IdentitySnapshot {
  double t = 0.0;
  /// Step size used to reach this snapshot from the previous one (unused for the first).
  double tau = 0.0;
  elasticity::Equilibrium eq;
};

struct IdentityTerms {
  /// Centred difference of the Lyapunov quantity.
  double lhs = 0.0;
  /// -2 d2J[Lap R] - 2 int B[grad R, grad R] Lap R + int H |grad R|^2 Lap R at the middle time.
  double rhs = 0.0;
  double second_variation = 0.0;
  double curvature_term = 0.0;
  double mean_curvature_term = 0.0;
  double mismatch = 0.0;
};

inline constexpr double kMismatchFloor = 1e-14;

/// Compares d/dt of the Lyapunov quantity with its closed-form expression at the middle
/// of three consecutive snapshots. The step sizes must agree.
IdentityTerms energy_identity_check(const IdentitySnapshot& prev, const IdentitySnapshot& mid,
                                    const IdentitySnapshot& next, const elasticity::ElasticSetup& setup,
                                    double sigma);

}  // namespace elastoflow::diagnostics
