#pragma once

#include "elastoflow/grid.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace elastoflow {

using Coefficients = std::vector<std::complex<double>>;

/// Fourier pseudo-spectral transforms and derivatives on a periodic grid.
///
/// Coefficients are normalized amplitudes: f(x) = sum_k c_k exp(2 pi i k.x), so a
/// constant field c has c_0 = c regardless of n. Odd-order derivatives drop the
/// Nyquist mode so that they stay real and skew-adjoint.
///
/// Instances are shared per grid (see `for_grid`) and safe to use concurrently.
class Spectral {
 public:
  /// Symbol evaluated at integer frequencies (k1, k2) with Nyquist flags.
  using Symbol = std::function<std::complex<double>(int k1, int k2, bool nyq1, bool nyq2)>;

  static const Spectral& for_grid(const Grid& grid);

  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  const Grid& grid() const { return grid_; }

  Coefficients forward(const Field& f) const;
  Field inverse(const Coefficients& c) const;

  Field apply(const Field& f, const Symbol& symbol) const;

  Field derivative(const Field& f, int axis) const;
  Field second_derivative(const Field& f, int axis_a, int axis_b) const;
  Field laplacian(const Field& f) const;
  Field bilaplacian(const Field& f) const;

  /// Band-limited interpolation (n grows) or truncation (n shrinks) onto `target`.
  Field resample(const Field& f, const Grid& target) const;

 private:
  explicit Spectral(const Grid& grid);

  void execute(std::vector<std::complex<double>>& data, bool forward) const;

  Grid grid_;
  void* plan_forward_ = nullptr;
  void* plan_backward_ = nullptr;
};

/// Cell average of a field (integral over the unit cell).
double cell_mean(const Field& f);

}  // namespace elastoflow
