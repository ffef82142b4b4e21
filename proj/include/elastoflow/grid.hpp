#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>

namespace elastoflow {

/// Nodal samples on the periodic unit cell, row-major (last axis fastest).
using Field = Eigen::VectorXd;

/// Uniform periodic grid on the flat unit torus of dimension 1 or 2.
class Grid {
 public:
  Grid() = default;
  Grid(int surface_dim, int n);

  int surface_dim() const { return dim_; }
  int n() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  std::size_t size() const;

  /// Signed frequency of a transform index; the Nyquist index maps to +n/2.
  int wavenumber(int index) const { return index <= n_ / 2 ? index : index - n_; }
  bool is_nyquist(int index) const { return index == n_ / 2; }

  /// Coordinate of node `index` along an axis.
  double coordinate(int index) const { return index * spacing(); }

  /// Field whose value at node (x1[, x2]) is fn(x1, x2); x2 is 0 in dimension 1.
  Field sample(const std::function<double(double, double)>& fn) const;

  bool operator==(const Grid&) const = default;

 private:
  int dim_ = 1;
  int n_ = 8;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);
void require_field_size(const Grid& grid, const Field& f, const char* what);

/// Periodic height profile of the film over the reference torus.
struct HeightField {
  Grid grid;
  Field values;

  HeightField() = default;
  HeightField(const Grid& g, Field v);

  static HeightField constant(const Grid& g, double value);

  double min() const { return values.minCoeff(); }
  double mean() const { return values.mean(); }
  bool all_finite() const { return values.allFinite(); }
};

}  // namespace elastoflow
