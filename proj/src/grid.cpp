#include "elastoflow/grid.hpp"

#include "elastoflow/error.hpp"

#include <string>

namespace elastoflow {

Grid::Grid(int surface_dim, int n) : dim_(surface_dim), n_(n) {
  if (surface_dim != 1 && surface_dim != 2) {
    throw InvalidInput("grid: surface dimension must be 1 or 2, got " + std::to_string(surface_dim));
  }
  if (n < 8 || n % 2 != 0) {
    throw InvalidInput("grid: n must be even and >= 8, got " + std::to_string(n));
  }
}

std::size_t Grid::size() const {
  return dim_ == 1 ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_) * n_;
}

Field Grid::sample(const std::function<double(double, double)>& fn) const {
  Field f(size());
  if (dim_ == 1) {
    for (int i = 0; i < n_; ++i) f[i] = fn(coordinate(i), 0.0);
  } else {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) f[i * n_ + j] = fn(coordinate(i), coordinate(j));
  }
  return f;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw GridMismatch(std::string(what) + ": grids differ");
}

void require_field_size(const Grid& grid, const Field& f, const char* what) {
  if (static_cast<std::size_t>(f.size()) != grid.size()) {
    throw GridMismatch(std::string(what) + ": field has " + std::to_string(f.size()) +
                       " samples, grid has " + std::to_string(grid.size()));
  }
}

HeightField::HeightField(const Grid& g, Field v) : grid(g), values(std::move(v)) {
  require_field_size(grid, values, "height field");
}

HeightField HeightField::constant(const Grid& g, double value) {
  return HeightField(g, Field::Constant(static_cast<Eigen::Index>(g.size()), value));
}

}  // namespace elastoflow
