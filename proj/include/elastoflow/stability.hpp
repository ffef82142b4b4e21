#pragma once

#include "elastoflow/elasticity.hpp"
#include "elastoflow/grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <utility>
#include <vector>

namespace elastoflow::stability {

/// Real Fourier mode cos(2 pi k.x) or sin(2 pi k.x); k2 is 0 in dimension 1.
struct FourierMode {
  int k1 = 1;
  int k2 = 0;
  bool cosine = true;
};

/// Zero-mean real modes with max(|k1|, |k2|) <= cutoff, one per half-plane frequency.
std::vector<FourierMode> fourier_basis(const Grid& grid, int cutoff);

Field mode_values(const Grid& grid, const FourierMode& mode);

/// Default cutoff n / 4.
int default_cutoff(const Grid& grid);

struct SecondVariationTerms {
  /// int |grad psi|^2 - |B|^2 psi^2 over the surface.
  double surface = 0.0;
  /// -2 int Q(E(u_psi)) over the film.
  double elastic_bulk = 0.0;
  /// int d_nu Q psi^2 over the surface.
  double elastic_normal = 0.0;
  /// surface + sigma * (elastic_bulk + elastic_normal).
  double total = 0.0;
};

/// Second variation of surface + sigma * bulk energy along the normal field psi.
///
/// psi is the normal velocity and must have zero surface mean. With sigma = +1 (film
/// orientation, outward normal pointing out of the elastic body) the normal-derivative
/// term enters with a plus sign, which makes the result the second derivative of the
/// discrete energy along volume-preserving graph paths at stationary points.
SecondVariationTerms second_variation_apply(const Field& psi, const elasticity::Equilibrium& eq,
                                            const elasticity::ElasticSetup& setup, double sigma);

struct QuadraticFormAssembly {
  std::vector<FourierMode> basis;
  Eigen::MatrixXd form;
  Eigen::MatrixXd mass_l2;
  Eigen::MatrixXd mass_h1;
};

/// Assembles the form on the basis psi_a = mode_a / J (zero surface mean by construction).
/// Basis elastic solves run in parallel; the reduction order is fixed.
QuadraticFormAssembly assemble_quadratic_form(const elasticity::Equilibrium& eq,
                                              const elasticity::ElasticSetup& setup, double sigma,
                                              int cutoff);

struct StabilityReport {
  double min_eig_l2 = 0.0;
  double min_eig_h1 = 0.0;
  double stationarity_residual = 0.0;
  bool is_stationary = false;
  bool is_strictly_stable = false;
  /// |min_eig_h1| within the strictness threshold.
  bool inconclusive = false;
  /// Smallest generalized eigenvalues (H1 normalization), ascending.
  std::vector<double> spectrum_head;
};

inline constexpr double kStrictnessThreshold = 1e-8;

StabilityReport analyze(const QuadraticFormAssembly& form, double stationarity_residual,
                        double stationarity_tol = 1e-8);

StabilityReport min_eigenvalue(const elasticity::Equilibrium& eq, const elasticity::ElasticSetup& setup,
                               double sigma, int cutoff, double stationarity_tol = 1e-8);

struct ScanRow {
  double d = 0.0;
  double min_eig_l2 = 0.0;
  double min_eig_h1 = 0.0;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  int sign_changes = 0;
  /// Consecutive thicknesses around the single sign change, when there is exactly one.
  std::optional<std::pair<double, double>> bracket;
  /// Linear interpolation of the zero of min_eig_h1 inside the bracket.
  std::optional<double> d0_estimate;
};

/// Minimum eigenvalues of flat films h = d over a thickness list (sorted ascending).
ScanResult flat_scan(const std::vector<double>& d_list, const Grid& grid,
                     const elasticity::ElasticSetup& setup, double sigma, int cutoff);

bool is_stationary(const HeightField& h, const elasticity::ElasticTrace& trace, double sigma, double tol);

}  // namespace elastoflow::stability
