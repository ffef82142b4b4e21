#pragma once

#include <Eigen/Core>

#include <array>

namespace elastoflow::elasticity {

using Mat3 = Eigen::Matrix3d;

/// Fourth-order elasticity tensor acting on 3x3 matrices through their symmetric part.
///
/// Plane-strain problems embed 2x2 strains in the upper-left block; the
/// out-of-plane stress that results is ignored by the 2-D assembly.
class ElasticTensor {
 public:
  enum class Kind { isotropic, general };

  /// Isotropic with lambda = mu = 1.
  ElasticTensor() = default;

  static ElasticTensor isotropic(double lambda, double mu);

  /// Components C_ijkl at index ((i*3 + j)*3 + k)*3 + l. Must have the minor and
  /// major symmetries and be positive on symmetric matrices.
  static ElasticTensor general(const std::array<double, 81>& components);

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double mu() const { return mu_; }

  /// C sym(A).
  Mat3 apply(const Mat3& A) const;

  /// Q(A) = C A : A / 2.
  double energy_density(const Mat3& A) const;

 private:
  Kind kind_ = Kind::isotropic;
  double lambda_ = 1.0;
  double mu_ = 1.0;
  std::array<double, 81> c_{};
};

}  // namespace elastoflow::elasticity
