#pragma once

#include "elastoflow/grid.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace elastoflow::geometry {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Components of a tangent (or cotangent) field in the chart x, one Field per axis.
using ComponentField = std::vector<Field>;

/// Pulled-back metric data of the graph {(x, h(x))} over the flat torus.
///
/// Per-node tensors are stored as 2x2 blocks; in surface dimension 1 only the
/// (0,0) entry is meaningful and the rest are zero. The normal lives in the
/// ambient space with components (x1[, x2], z): in dimension 1 it is
/// (nu_x, nu_z, 0).
///
/// Orientation: the normal points up, out of the film, and
/// H = -div(grad h / J) = g^ij B_ij with B_ij = -d_ij h / J. A concave bump has H > 0
/// at its apex.
struct SurfaceGeometry {
  Grid grid;
  std::vector<Vec2> grad_h;
  std::vector<Mat2> hess_h;
  std::vector<Mat2> g;
  std::vector<Mat2> g_inv;
  std::vector<Mat2> B;
  /// christoffel[k](i, j) = Gamma^k_ij.
  std::vector<std::array<Mat2, 2>> christoffel;
  std::vector<Vec3> nu;
  Field sqrt_det_g;
  Field J;
  Field H;

  int dim() const { return grid.surface_dim(); }
};

SurfaceGeometry compute_geometry(const HeightField& h);

/// Coordinate partials d_i f.
ComponentField gradient(const Field& f, const Grid& grid);

/// X^i = g^ij w_j.
ComponentField raise_index(const ComponentField& covector, const SurfaceGeometry& geom);

/// div_g X = (1/sqrt g) d_i(sqrt g X^i) for contravariant X.
Field divergence(const ComponentField& X, const SurfaceGeometry& geom);

/// Laplace-Beltrami (1/sqrt g) d_i(sqrt g g^ij d_j f).
Field laplace_beltrami(const Field& f, const SurfaceGeometry& geom);

/// <grad f, X>_g = d_i f X^i for contravariant X.
Field pair(const ComponentField& covector, const ComponentField& X);

/// |grad f|_g^2 = g^ij d_i f d_j f.
Field tangential_gradient_squared(const Field& f, const SurfaceGeometry& geom);

/// g^ij d_i f d_j w.
Field metric_product(const Field& f, const Field& w, const SurfaceGeometry& geom);

/// |B|_g^2 = g^ik g^jl B_ij B_kl.
Field second_fundamental_norm_squared(const SurfaceGeometry& geom);

/// B(grad_g f, grad_g f) with grad_g f the tangent vector g^ij d_j f.
Field second_fundamental_form_on_gradient(const Field& f, const SurfaceGeometry& geom);

/// Integral over the graph: int f J dx over the unit cell.
double surface_integral(const Field& f, const SurfaceGeometry& geom);

/// Area-weighted mean of f on the surface.
double surface_mean(const Field& f, const SurfaceGeometry& geom);

/// L2(Gamma) norm.
double surface_l2_norm(const Field& f, const SurfaceGeometry& geom);

}  // namespace elastoflow::geometry
