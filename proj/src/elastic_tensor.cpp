#include "elastoflow/elastic_tensor.hpp"

#include "elastoflow/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace elastoflow::elasticity {

ElasticTensor ElasticTensor::isotropic(double lambda, double mu) {
  if (!(mu > 0.0) || !(lambda > 0.0) || !std::isfinite(lambda) || !std::isfinite(mu)) {
    throw InvalidInput("isotropic tensor needs lambda > 0 and mu > 0");
  }
  ElasticTensor t;
  t.kind_ = Kind::isotropic;
  t.lambda_ = lambda;
  t.mu_ = mu;
  return t;
}

ElasticTensor ElasticTensor::general(const std::array<double, 81>& components) {
  auto at = [&](int i, int j, int k, int l) { return components[((i * 3 + j) * 3 + k) * 3 + l]; };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const double v = at(i, j, k, l);
          if (!std::isfinite(v)) throw InvalidInput("elastic tensor: non-finite component");
          const double tol = 1e-12 * (1.0 + std::abs(v));
          if (std::abs(v - at(j, i, k, l)) > tol || std::abs(v - at(i, j, l, k)) > tol ||
              std::abs(v - at(k, l, i, j)) > tol) {
            throw InvalidInput("elastic tensor: missing minor/major symmetry");
          }
        }
  // Positivity on symmetric matrices: 6x6 Voigt-type matrix in an orthonormal basis.
  const std::array<std::pair<int, int>, 6> pairs{{{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};
  Eigen::Matrix<double, 6, 6> voigt;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const auto [i, j] = pairs[a];
      const auto [k, l] = pairs[b];
      const double wa = i == j ? 1.0 : std::sqrt(2.0);
      const double wb = k == l ? 1.0 : std::sqrt(2.0);
      voigt(a, b) = wa * wb * at(i, j, k, l);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(voigt);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidInput("elastic tensor: not positive definite on symmetric matrices");
  }
  ElasticTensor t;
  t.kind_ = Kind::general;
  t.c_ = components;
  return t;
}

Mat3 ElasticTensor::apply(const Mat3& A) const {
  const Mat3 E = 0.5 * (A + A.transpose());
  if (kind_ == Kind::isotropic) {
    return lambda_ * E.trace() * Mat3::Identity() + 2.0 * mu_ * E;
  }
  Mat3 out = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) s += c_[((i * 3 + j) * 3 + k) * 3 + l] * E(k, l);
      out(i, j) = s;
    }
  return out;
}

double ElasticTensor::energy_density(const Mat3& A) const {
  const Mat3 E = 0.5 * (A + A.transpose());
  return 0.5 * apply(E).cwiseProduct(E).sum();
}

}  // namespace elastoflow::elasticity
