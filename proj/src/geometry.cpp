#include "elastoflow/geometry.hpp"

#include "elastoflow/error.hpp"
#include "elastoflow/spectral.hpp"

#include <cmath>

namespace elastoflow::geometry {

namespace {

void require_geometry_field(const SurfaceGeometry& geom, const Field& f, const char* what) {
  require_field_size(geom.grid, f, what);
}

}  // namespace

SurfaceGeometry compute_geometry(const HeightField& h) {
  require_field_size(h.grid, h.values, "compute_geometry");
  if (!h.all_finite()) throw InvalidInput("compute_geometry: height field has non-finite samples");

  const Grid& grid = h.grid;
  const Spectral& sp = Spectral::for_grid(grid);
  const int dim = grid.surface_dim();
  const auto count = static_cast<Eigen::Index>(grid.size());

  std::array<Field, 2> dh;
  std::array<std::array<Field, 2>, 2> d2h;
  for (int a = 0; a < dim; ++a) dh[a] = sp.derivative(h.values, a);
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b) d2h[a][b] = sp.second_derivative(h.values, a, b);

  SurfaceGeometry geom;
  geom.grid = grid;
  geom.grad_h.resize(count);
  geom.hess_h.resize(count);
  geom.g.resize(count);
  geom.g_inv.resize(count);
  geom.B.resize(count);
  geom.christoffel.resize(count);
  geom.nu.resize(count);
  geom.sqrt_det_g.resize(count);
  geom.J.resize(count);
  geom.H.resize(count);

  for (Eigen::Index p = 0; p < count; ++p) {
    Vec2 grad = Vec2::Zero();
    Mat2 hess = Mat2::Zero();
    for (int a = 0; a < dim; ++a) {
      grad[a] = dh[a][p];
      for (int b = a; b < dim; ++b) {
        hess(a, b) = d2h[a][b][p];
        hess(b, a) = hess(a, b);
      }
    }
    const double J2 = 1.0 + grad.squaredNorm();
    const double J = std::sqrt(J2);

    Mat2 id = Mat2::Zero();
    for (int a = 0; a < dim; ++a) id(a, a) = 1.0;

    geom.grad_h[p] = grad;
    geom.hess_h[p] = hess;
    geom.g[p] = id + grad * grad.transpose();
    geom.g_inv[p] = id - grad * grad.transpose() / J2;
    geom.B[p] = -hess / J;
    geom.H[p] = (geom.g_inv[p].cwiseProduct(geom.B[p])).sum();
    geom.J[p] = J;
    geom.sqrt_det_g[p] = J;
    for (int k = 0; k < 2; ++k) geom.christoffel[p][k] = (grad[k] / J2) * hess;

    Vec3 nu = Vec3::Zero();
    for (int a = 0; a < dim; ++a) nu[a] = -grad[a] / J;
    nu[dim] = 1.0 / J;
    geom.nu[p] = nu;
  }
  return geom;
}

ComponentField gradient(const Field& f, const Grid& grid) {
  require_field_size(grid, f, "gradient");
  const Spectral& sp = Spectral::for_grid(grid);
  ComponentField out;
  for (int a = 0; a < grid.surface_dim(); ++a) out.push_back(sp.derivative(f, a));
  return out;
}

ComponentField raise_index(const ComponentField& covector, const SurfaceGeometry& geom) {
  const int dim = geom.dim();
  if (static_cast<int>(covector.size()) != dim) throw GridMismatch("raise_index: component count");
  ComponentField out(dim, Field::Zero(static_cast<Eigen::Index>(geom.grid.size())));
  for (Eigen::Index p = 0; p < out[0].size(); ++p)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) out[i][p] += geom.g_inv[p](i, j) * covector[j][p];
  return out;
}

Field divergence(const ComponentField& X, const SurfaceGeometry& geom) {
  const int dim = geom.dim();
  if (static_cast<int>(X.size()) != dim) throw GridMismatch("divergence: component count");
  const Spectral& sp = Spectral::for_grid(geom.grid);
  Field acc = Field::Zero(static_cast<Eigen::Index>(geom.grid.size()));
  for (int i = 0; i < dim; ++i) {
    require_geometry_field(geom, X[i], "divergence");
    acc += sp.derivative(geom.sqrt_det_g.cwiseProduct(X[i]), i);
  }
  return acc.cwiseQuotient(geom.sqrt_det_g);
}

Field laplace_beltrami(const Field& f, const SurfaceGeometry& geom) {
  require_geometry_field(geom, f, "laplace_beltrami");
  const int dim = geom.dim();
  const Spectral& sp = Spectral::for_grid(geom.grid);
  std::array<Field, 2> df;
  for (int j = 0; j < dim; ++j) df[j] = sp.derivative(f, j);

  Field out = Field::Zero(f.size());
  for (int i = 0; i < dim; ++i) {
    Field flux(f.size());
    for (Eigen::Index p = 0; p < f.size(); ++p) {
      double s = 0.0;
      for (int j = 0; j < dim; ++j) s += geom.g_inv[p](i, j) * df[j][p];
      flux[p] = geom.sqrt_det_g[p] * s;
    }
    out += sp.derivative(flux, i);
  }
  return out.cwiseQuotient(geom.sqrt_det_g);
}

Field pair(const ComponentField& covector, const ComponentField& X) {
  if (covector.size() != X.size() || covector.empty()) throw GridMismatch("pair: component count");
  Field out = Field::Zero(X[0].size());
  for (std::size_t i = 0; i < X.size(); ++i) out += covector[i].cwiseProduct(X[i]);
  return out;
}

Field metric_product(const Field& f, const Field& w, const SurfaceGeometry& geom) {
  require_geometry_field(geom, f, "metric_product");
  require_geometry_field(geom, w, "metric_product");
  const ComponentField df = gradient(f, geom.grid);
  const ComponentField dw = gradient(w, geom.grid);
  const int dim = geom.dim();
  Field out(f.size());
  for (Eigen::Index p = 0; p < f.size(); ++p) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) s += geom.g_inv[p](i, j) * df[i][p] * dw[j][p];
    out[p] = s;
  }
  return out;
}

Field tangential_gradient_squared(const Field& f, const SurfaceGeometry& geom) {
  return metric_product(f, f, geom);
}

Field second_fundamental_norm_squared(const SurfaceGeometry& geom) {
  Field out(static_cast<Eigen::Index>(geom.grid.size()));
  for (Eigen::Index p = 0; p < out.size(); ++p) {
    const Mat2 mixed = geom.g_inv[p] * geom.B[p];
    out[p] = (mixed * mixed).trace();
  }
  return out;
}

Field second_fundamental_form_on_gradient(const Field& f, const SurfaceGeometry& geom) {
  require_geometry_field(geom, f, "second_fundamental_form_on_gradient");
  const ComponentField up = raise_index(gradient(f, geom.grid), geom);
  const int dim = geom.dim();
  Field out(f.size());
  for (Eigen::Index p = 0; p < f.size(); ++p) {
    Vec2 v = Vec2::Zero();
    for (int i = 0; i < dim; ++i) v[i] = up[i][p];
    out[p] = v.dot(geom.B[p] * v);
  }
  return out;
}

double surface_integral(const Field& f, const SurfaceGeometry& geom) {
  require_geometry_field(geom, f, "surface_integral");
  return f.cwiseProduct(geom.J).mean();
}

double surface_mean(const Field& f, const SurfaceGeometry& geom) {
  return surface_integral(f, geom) / geom.J.mean();
}

double surface_l2_norm(const Field& f, const SurfaceGeometry& geom) {
  return std::sqrt(surface_integral(f.cwiseAbs2(), geom));
}

}  // namespace elastoflow::geometry
