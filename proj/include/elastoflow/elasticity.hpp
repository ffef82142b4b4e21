#pragma once

#include "elastoflow/elastic_tensor.hpp"
#include "elastoflow/grid.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <mutex>
#include <vector>

namespace elastoflow::elasticity {

enum class SolverKind { conjugate_gradient, direct };

struct SolverOptions {
  SolverKind kind = SolverKind::conjugate_gradient;
  double tolerance = 1e-10;
  /// 0 selects 10 x (number of unknowns).
  long max_iterations = 0;
};

/// Everything the bulk problem needs besides the height profile.
struct ElasticSetup {
  ElasticTensor tensor;
  double e0 = 0.0;
  /// Vertical node layers of the mapped strip, s = 0 .. 1 inclusive.
  int m = 16;
  SolverOptions solver{};
};

struct SolveStats {
  double residual = 0.0;
  long iterations = 0;
};

/// Fluctuation displacement on the mapped strip (x, s) -> (x, s h(x)).
///
/// The total displacement is u = e0 (x1[, x2], 0) + fluctuation; the fluctuation is
/// laterally periodic and vanishes on the substrate layer s = 0. Storage is node-major
/// with `bulk_dim()` components per node; node id = layer * lateral_count + lateral index.
struct BulkDisplacement {
  Grid grid;
  int m = 0;
  double e0 = 0.0;
  Field heights;
  Eigen::VectorXd fluctuation;
  SolveStats stats;

  int bulk_dim() const { return grid.surface_dim() + 1; }
  Eigen::Index lateral_count() const { return static_cast<Eigen::Index>(grid.size()); }
  double layer_coordinate(int layer) const { return static_cast<double>(layer) / (m - 1); }
  /// Fluctuation at a node, embedded in 3 components (vertical is index bulk_dim()-1).
  Eigen::Vector3d fluctuation_at(Eigen::Index lateral, int layer) const;
};

/// Top-surface quantities of an equilibrium, sampled at the surface grid nodes.
struct ElasticTrace {
  /// Q(E(u)) on the film surface.
  Field q;
  /// Derivative of Q(E(u)) along the outward (upward) unit normal.
  Field dq_dn;
  /// C E(u) at the surface nodes (3x3 embedding).
  std::vector<Mat3> stress;
  /// |C E(u) nu| at the surface nodes.
  Field traction;
};

/// Q1 isoparametric discretization of the Lame system on the mapped strip.
///
/// Holds the stiffness matrix on the free (s > 0) degrees of freedom and the per-element
/// quadrature data; reusable for any number of right-hand sides at fixed geometry.
class StripOperator {
 public:
  StripOperator(const HeightField& h, const ElasticTensor& tensor, int m);

  const Grid& grid() const { return grid_; }
  int m() const { return m_; }
  int bulk_dim() const { return grid_.surface_dim() + 1; }
  Eigen::Index lateral_count() const { return static_cast<Eigen::Index>(grid_.size()); }
  Eigen::Index free_dof_count() const;
  const Field& heights() const { return heights_; }
  const ElasticTensor& tensor() const { return tensor_; }
  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

  /// Load vector of the mismatch problem: -int C E0 : E(phi).
  Eigen::VectorXd equilibrium_load(double e0) const;

  /// Load vector int_Gamma psi C E(u) : grad_tau phi, the integrated-by-parts form of
  /// -int_Gamma div_g(psi C E(u)) . phi for the linearized problem.
  Eigen::VectorXd linearized_load(const Field& psi, const BulkDisplacement& u) const;

  /// Solves K x = rhs. Direct solves factorize once and reuse the factorization.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, const SolverOptions& options,
                        const Eigen::VectorXd* guess, SolveStats& stats) const;

  BulkDisplacement displacement_from_free(const Eigen::VectorXd& free, double e0) const;
  Eigen::VectorXd free_from_displacement(const BulkDisplacement& u) const;

  /// int Q(E0 + E(fluctuation)) over the strip (Gauss quadrature on the mapped elements).
  double energy(const BulkDisplacement& u) const;

  /// 1/2 x^T K x = int Q(E(x)) for a homogeneous-Dirichlet field.
  double quadratic_energy(const Eigen::VectorXd& free) const;

  /// Per-element quadrature data; opaque outside the implementation.
  struct Impl;

 private:

  Grid grid_;
  int m_;
  Field heights_;
  ElasticTensor tensor_;
  std::shared_ptr<const Impl> impl_;
  Eigen::SparseMatrix<double> stiffness_;

  struct Factorization;
  mutable std::shared_ptr<Factorization> factorization_;
  mutable std::once_flag factorize_once_;
};

BulkDisplacement solve_equilibrium(const HeightField& h, const ElasticSetup& setup,
                                   const BulkDisplacement* warm_start = nullptr);

ElasticTrace boundary_traces(const BulkDisplacement& u, const HeightField& h,
                             const ElasticTensor& tensor);

double bulk_energy(const BulkDisplacement& u, const HeightField& h, const ElasticTensor& tensor);

/// u_psi with homogeneous Dirichlet data on the substrate; psi must have zero surface mean.
BulkDisplacement solve_linearized(const Field& psi, const BulkDisplacement& u, const HeightField& h,
                                  const ElasticSetup& setup);

/// An elastic equilibrium together with the derived surface data the flow and the
/// stability analysis consume.
struct Equilibrium {
  HeightField h;
  BulkDisplacement u;
  ElasticTrace trace;
  double bulk_energy = 0.0;
};

/// Solves, evaluates the traces and the bulk energy with a single assembly. A zero
/// mismatch strain short-circuits to the trivial solution.
Equilibrium solve_state(const HeightField& h, const ElasticSetup& setup,
                        const BulkDisplacement* warm_start = nullptr);

/// Minimum admissible film thickness check used by every solve.
void require_film(const HeightField& h, double h_min);

/// Plane-strain (bulk dim 2) or 3-D flat-film vertical strain c of the affine equilibrium.
double flat_film_vertical_strain(const ElasticTensor& tensor, double e0, int bulk_dim);

/// Constant energy density Q* of the flat-film equilibrium.
double flat_film_energy_density(const ElasticTensor& tensor, double e0, int bulk_dim);

}  // namespace elastoflow::elasticity
