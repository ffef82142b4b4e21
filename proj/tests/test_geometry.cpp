#include "elastoflow/error.hpp"
#include "elastoflow/geometry.hpp"
#include "elastoflow/spectral.hpp"
#include "support.hpp"

#include <Eigen/LU>
#include <doctest.h>

#include <limits>

using namespace elastoflow;
using namespace elastoflow::geometry;
using testing_support::kTwoPi;
using testing_support::random_field;

namespace {

HeightField random_height(const Grid& g, std::uint64_t seed, double amplitude = 0.002) {
  return HeightField(g, (Field::Constant(static_cast<Eigen::Index>(g.size()), 0.3) +
                         random_field(g, 3, seed, amplitude)).eval());
}

/// Laplace-Beltrami written as g^ij f_ij - g^ij Gamma^k_ij f_k with the graph metric
/// expanded by hand.
Field expanded_laplace_beltrami(const HeightField& h, const Field& f) {
  const Grid& g = h.grid;
  const auto& s = Spectral::for_grid(g);
  const int dim = g.surface_dim();
  std::vector<Field> hi(dim), fi(dim);
  std::vector<std::vector<Field>> hij(dim, std::vector<Field>(dim)), fij(dim, std::vector<Field>(dim));
  for (int i = 0; i < dim; ++i) {
    hi[i] = s.derivative(h.values, i);
    fi[i] = s.derivative(f, i);
    for (int j = 0; j < dim; ++j) {
      hij[i][j] = s.second_derivative(h.values, i, j);
      fij[i][j] = s.second_derivative(f, i, j);
    }
  }
  Field out(f.size());
  for (Eigen::Index p = 0; p < f.size(); ++p) {
    double grad2 = 0.0;
    for (int i = 0; i < dim; ++i) grad2 += hi[i][p] * hi[i][p];
    const double J2 = 1.0 + grad2;
    double flat = 0.0, a1 = 0.0, trace_h = 0.0, hhh = 0.0, hf = 0.0;
    for (int i = 0; i < dim; ++i) {
      flat += fij[i][i][p];
      trace_h += hij[i][i][p];
      hf += hi[i][p] * fi[i][p];
      for (int j = 0; j < dim; ++j) {
        a1 -= hi[i][p] * hi[j][p] * fij[i][j][p] / J2;
        hhh += hi[i][p] * hi[j][p] * hij[i][j][p];
      }
    }
    const double g_hess = trace_h - hhh / J2;
    out[p] = flat + a1 - g_hess * hf / J2;
  }
  return out;
}

double l2(const Field& f, const SurfaceGeometry& geom) { return surface_l2_norm(f, geom); }

}  // namespace

TEST_CASE("constant height gives the flat geometry") {
  for (int dim : {1, 2}) {
    const Grid g(dim, 16);
    const auto geom = compute_geometry(HeightField::constant(g, 0.7));
    for (std::size_t p = 0; p < g.size(); ++p) {
      CHECK(geom.J[p] == 1.0);
      CHECK(geom.H[p] == 0.0);
      CHECK(geom.B[p].norm() == 0.0);
      CHECK(geom.nu[p][dim] == 1.0);
      CHECK(geom.g_inv[p](0, 0) == 1.0);
    }
  }
}

TEST_CASE("zero height has zero mean curvature") {
  const auto geom = compute_geometry(HeightField::constant(Grid(2, 16), 0.0));
  CHECK(geom.H.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mean curvature of a sine graph matches the closed form") {
  const double eps = 0.05;
  const Grid g(1, 128);
  const HeightField h(g, g.sample([&](double x, double) { return eps * std::sin(kTwoPi * x); }));
  const auto geom = compute_geometry(h);
  const Field exact = g.sample([&](double x, double) {
    const double c = std::cos(kTwoPi * x);
    return eps * kTwoPi * kTwoPi * std::sin(kTwoPi * x) / std::pow(1.0 + eps * eps * kTwoPi * kTwoPi * c * c, 1.5);
  });
  CHECK((geom.H - exact).cwiseAbs().maxCoeff() < 1e-10 * exact.cwiseAbs().maxCoeff());
}

TEST_CASE("metric invariants hold on random graphs") {
  const Grid g(2, 32);
  const auto geom = compute_geometry(random_height(g, 3, 0.08));
  for (std::size_t p = 0; p < g.size(); ++p) {
    CHECK((geom.g[p] * geom.g_inv[p] - Mat2::Identity()).norm() < 1e-13);
    CHECK((geom.g[p] - geom.g[p].transpose()).norm() == 0.0);
    CHECK(geom.g[p].determinant() > 0.0);
    CHECK(geom.nu[p].norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(geom.J[p] == doctest::Approx(geom.sqrt_det_g[p]).epsilon(1e-14));
    CHECK((geom.g_inv[p] * geom.B[p]).trace() == doctest::Approx(geom.H[p]).epsilon(1e-12));
  }
}

TEST_CASE("concave bump has positive mean curvature at the apex") {
  const Grid g(2, 32);
  const HeightField h(g, g.sample([](double x, double y) {
    return 0.2 + 0.05 * std::cos(kTwoPi * (x - 0.5)) * std::cos(kTwoPi * (y - 0.5));
  }));
  const auto geom = compute_geometry(h);
  const std::size_t apex = 16 * 32 + 16;
  CHECK(geom.H[apex] > 0.0);
}

TEST_CASE("non-finite heights are rejected") {
  const Grid g(1, 16);
  Field v = Field::Constant(16, 0.1);
  v[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(compute_geometry(HeightField(g, v)), InvalidInput);
}

TEST_CASE("Laplace-Beltrami on the flat metric") {
  const Grid g(1, 32);
  const auto geom = compute_geometry(HeightField::constant(g, 0.1));
  const Field f = g.sample([](double x, double) { return std::sin(kTwoPi * x); });
  CHECK((laplace_beltrami(f, geom) + kTwoPi * kTwoPi * f).cwiseAbs().maxCoeff() < 1e-10);
  const auto curved = compute_geometry(random_height(g, 9));
  CHECK(laplace_beltrami(Field::Constant(32, 4.0), curved).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Laplace-Beltrami agrees with the expanded coordinate form") {
  for (int dim : {1, 2}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const Grid g(dim, dim == 1 ? 128 : 64);
      const HeightField h = random_height(g, seed);
      const Field f = random_field(g, 3, seed + 100);
      const auto geom = compute_geometry(h);
      const Field lb = laplace_beltrami(f, geom);
      const Field ref = expanded_laplace_beltrami(h, f);
      CHECK((lb - ref).norm() <= 1e-8 * ref.norm());
    }
  }
}

TEST_CASE("Laplace-Beltrami equals divergence of the raised gradient") {
  const Grid g(2, 48);
  const auto geom = compute_geometry(random_height(g, 21));
  const Field f = random_field(g, 3, 22);
  const Field composed = divergence(raise_index(gradient(f, g), geom), geom);
  const Field lb = laplace_beltrami(f, geom);
  CHECK((composed - lb).norm() <= 1e-8 * lb.norm());
}

TEST_CASE("tangential gradient agrees with the ambient projection") {
  for (int dim : {1, 2}) {
    const Grid g(dim, 32);
    const HeightField h = random_height(g, 5);
    const auto geom = compute_geometry(h);
    const Field f = random_field(g, 3, 6);
    const Field ours = tangential_gradient_squared(f, geom);
    const auto& s = Spectral::for_grid(g);
    Field ref(f.size());
    for (Eigen::Index p = 0; p < f.size(); ++p) {
      Eigen::Vector3d nabla_F = Eigen::Vector3d::Zero();
      Eigen::Vector3d nu = Eigen::Vector3d::Zero();
      double grad2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        nabla_F[i] = s.derivative(f, i)[p];
        const double hi = s.derivative(h.values, i)[p];
        nu[i] = -hi;
        grad2 += hi * hi;
      }
      nu[dim] = 1.0;
      nu /= std::sqrt(1.0 + grad2);
      const Eigen::Vector3d tangential = nabla_F - nabla_F.dot(nu) * nu;
      ref[p] = tangential.squaredNorm();
    }
    CHECK((ours - ref).cwiseAbs().maxCoeff() <= 1e-8 * ref.cwiseAbs().maxCoeff());
    CHECK(ours.minCoeff() >= 0.0);
    CHECK(tangential_gradient_squared(Field::Constant(f.size(), 2.0), geom).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("tangential gradient on the flat metric") {
  const Grid g(1, 32);
  const auto geom = compute_geometry(HeightField::constant(g, 1.0));
  const Field f = g.sample([](double x, double) { return std::sin(kTwoPi * x); });
  const Field expected = g.sample([](double x, double) { return kTwoPi * kTwoPi * std::pow(std::cos(kTwoPi * x), 2); });
  CHECK((tangential_gradient_squared(f, geom) - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("surface area of a sine graph matches adaptive quadrature") {
  const double eps = 0.1;
  const Grid g(1, 256);
  const HeightField h(g, g.sample([&](double x, double) { return 1.0 + eps * std::sin(kTwoPi * x); }));
  const auto geom = compute_geometry(h);
  const double ours = surface_integral(Field::Ones(256), geom);
  const double ref = testing_support::adaptive_simpson(
      [&](double x) { return std::sqrt(1.0 + std::pow(eps * kTwoPi * std::cos(kTwoPi * x), 2)); }, 0.0, 1.0,
      1e-14);
  CHECK(std::abs(ours - ref) < 1e-10);
  CHECK(surface_integral(Field::Ones(256), compute_geometry(HeightField::constant(g, 0.4))) == 1.0);
}

TEST_CASE("divergence theorem and integration by parts on random graphs") {
  for (int dim : {1, 2}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Grid g(dim, dim == 1 ? 64 : 32);
      const auto geom = compute_geometry(random_height(g, 40 + seed));
      const Field f = random_field(g, 4, 50 + seed);
      ComponentField X(dim);
      double x_norm2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        X[i] = random_field(g, 4, 60 + 10 * seed + i);
        x_norm2 += surface_integral(X[i].cwiseAbs2(), geom);
      }
      CHECK(std::abs(surface_integral(divergence(X, geom), geom)) < 1e-12);
      const double lhs = surface_integral(pair(gradient(f, g), X), geom) +
                         surface_integral(f.cwiseProduct(divergence(X, geom)), geom);
      CHECK(std::abs(lhs) <= 1e-8 * l2(f, geom) * std::sqrt(x_norm2));
    }
  }
}

TEST_CASE("grid mismatches are rejected") {
  const auto geom = compute_geometry(HeightField::constant(Grid(1, 16), 1.0));
  CHECK_THROWS_AS(laplace_beltrami(Field::Zero(32), geom), GridMismatch);
  CHECK_THROWS_AS(tangential_gradient_squared(Field::Zero(8), geom), GridMismatch);
  CHECK_THROWS_AS(surface_integral(Field::Zero(32), geom), GridMismatch);
}
