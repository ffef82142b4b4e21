#include "elastoflow/elasticity.hpp"

#include "elastoflow/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>
#include <string>

namespace elastoflow::elasticity {

namespace {

constexpr double kGaussLo = 0.5 - 0.5 / 1.7320508075688772;
constexpr double kGaussHi = 0.5 + 0.5 / 1.7320508075688772;

// Lateral neighbour of a surface node along `axis`, periodic.
Eigen::Index shift_lateral(const Grid& grid, Eigen::Index lateral, int axis, int offset) {
  const int n = grid.n();
  if (grid.surface_dim() == 1) return ((lateral + offset) % n + n) % n;
  int i = static_cast<int>(lateral / n);
  int j = static_cast<int>(lateral % n);
  if (axis == 0) i = ((i + offset) % n + n) % n;
  else j = ((j + offset) % n + n) % n;
  return static_cast<Eigen::Index>(i) * n + j;
}

Mat3 mismatch_strain(double e0, int bulk_dim) {
  Mat3 E0 = Mat3::Zero();
  for (int a = 0; a < bulk_dim - 1; ++a) E0(a, a) = e0;
  return E0;
}

template <int D>
struct Kernel {
  static constexpr int kCorners = 1 << D;
  static constexpr int kDofs = kCorners * D;
  using VecD = Eigen::Matrix<double, D, 1>;
  using MatD = Eigen::Matrix<double, D, D>;
  using Grad = Eigen::Matrix<double, D, kCorners>;

  static int bit(int corner, int axis) { return (corner >> axis) & 1; }

  static double shape(int c, const VecD& xi) {
    double v = 1.0;
    for (int a = 0; a < D; ++a) v *= bit(c, a) ? xi[a] : 1.0 - xi[a];
    return v;
  }

  static VecD shape_gradient_ref(int c, const VecD& xi) {
    VecD g;
    for (int a = 0; a < D; ++a) {
      double v = bit(c, a) ? 1.0 : -1.0;
      for (int b = 0; b < D; ++b)
        if (b != a) v *= bit(c, b) ? xi[b] : 1.0 - xi[b];
      g[a] = v;
    }
    return g;
  }

  static MatD jacobian(const std::array<VecD, kCorners>& X, const VecD& xi) {
    MatD Jm = MatD::Zero();
    for (int c = 0; c < kCorners; ++c) Jm += X[c] * shape_gradient_ref(c, xi).transpose();
    return Jm;
  }

  static Grad physical_gradients(const MatD& Jm, const VecD& xi) {
    const MatD inv_t = Jm.inverse().transpose();
    Grad G;
    for (int c = 0; c < kCorners; ++c) G.col(c) = inv_t * shape_gradient_ref(c, xi);
    return G;
  }

  static std::vector<VecD> volume_points() {
    std::vector<VecD> pts;
    for (int q = 0; q < kCorners; ++q) {
      VecD xi;
      for (int a = 0; a < D; ++a) xi[a] = bit(q, a) ? kGaussHi : kGaussLo;
      pts.push_back(xi);
    }
    return pts;
  }

  // Gauss points on the top face (vertical reference coordinate = 1).
  static std::vector<VecD> top_face_points() {
    std::vector<VecD> pts;
    for (int q = 0; q < (1 << (D - 1)); ++q) {
      VecD xi;
      for (int a = 0; a < D - 1; ++a) xi[a] = bit(q, a) ? kGaussHi : kGaussLo;
      xi[D - 1] = 1.0;
      pts.push_back(xi);
    }
    return pts;
  }

  static Mat3 embed(const MatD& A) {
    Mat3 out = Mat3::Zero();
    out.template topLeftCorner<D, D>() = A;
    return out;
  }
};

}  // namespace

Eigen::Vector3d BulkDisplacement::fluctuation_at(Eigen::Index lateral, int layer) const {
  const int D = bulk_dim();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  const Eigen::Index node = static_cast<Eigen::Index>(layer) * lateral_count() + lateral;
  for (int r = 0; r < D; ++r) v[r] = fluctuation[node * D + r];
  return v;
}

// Quadrature data per element: physical shape gradients and weights at each point.
struct StripOperator::Impl {
  int D = 2;
  int corners = 4;
  Eigen::Index elements = 0;
  // element -> corner node ids
  std::vector<Eigen::Index> corner_nodes;
  // element, gauss point -> gradients (D x corners, column-major) and weight*det
  std::vector<double> gradients;
  std::vector<double> weights;
  int points_per_element = 4;
  // physical corner coordinates, element-major (D per corner)
  std::vector<double> corner_coords;

  const double* grad(Eigen::Index e, int q) const {
    return gradients.data() + (e * points_per_element + q) * D * corners;
  }
};

struct StripOperator::Factorization {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

namespace {

template <int D>
void build_elements(const Grid& grid, int m, const Field& h, StripOperator::Impl& impl) {
  using K = Kernel<D>;
  const int n = grid.n();
  const double dx = grid.spacing();
  const Eigen::Index NL = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index layers = m - 1;
  impl.D = D;
  impl.corners = K::kCorners;
  impl.elements = NL * layers;
  impl.points_per_element = K::kCorners;
  impl.corner_nodes.resize(impl.elements * K::kCorners);
  impl.corner_coords.resize(impl.elements * K::kCorners * D);
  impl.gradients.resize(impl.elements * K::kCorners * D * K::kCorners);
  impl.weights.resize(impl.elements * K::kCorners);

  const auto points = K::volume_points();
  for (Eigen::Index layer = 0; layer < layers; ++layer) {
    for (Eigen::Index eL = 0; eL < NL; ++eL) {
      const Eigen::Index e = layer * NL + eL;
      std::array<typename K::VecD, K::kCorners> X;
      for (int c = 0; c < K::kCorners; ++c) {
        Eigen::Index lat = eL;
        for (int a = 0; a < D - 1; ++a) lat = shift_lateral(grid, lat, a, K::bit(c, a));
        const Eigen::Index node_layer = layer + K::bit(c, D - 1);
        impl.corner_nodes[e * K::kCorners + c] = node_layer * NL + lat;
        // Unwrapped lateral coordinates relative to the element's first corner.
        for (int a = 0; a < D - 1; ++a) {
          const int base = D == 2 ? static_cast<int>(eL) : (a == 0 ? static_cast<int>(eL / n)
                                                                     : static_cast<int>(eL % n));
          X[c][a] = (base + K::bit(c, a)) * dx;
        }
        X[c][D - 1] = static_cast<double>(node_layer) / (m - 1) * h[lat];
        for (int a = 0; a < D; ++a) impl.corner_coords[(e * K::kCorners + c) * D + a] = X[c][a];
      }
      for (int q = 0; q < K::kCorners; ++q) {
        const auto Jm = K::jacobian(X, points[q]);
        const double det = Jm.determinant();
        if (!(det > 0.0)) throw DegenerateGeometry("strip element with non-positive Jacobian");
        const auto G = K::physical_gradients(Jm, points[q]);
        std::copy(G.data(), G.data() + D * K::kCorners,
                  impl.gradients.data() + (e * K::kCorners + q) * D * K::kCorners);
        impl.weights[e * K::kCorners + q] = det / K::kCorners;  // 2^-D Gauss weight on [0,1]^D
      }
    }
  }
}

template <int D>
Eigen::SparseMatrix<double> assemble_stiffness(const StripOperator::Impl& impl,
                                               const ElasticTensor& tensor, Eigen::Index NL) {
  using K = Kernel<D>;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(impl.elements) * K::kDofs * K::kDofs);
  const Eigen::Index free_nodes_offset = NL;
  Eigen::Matrix<double, K::kDofs, K::kDofs> ke;
  for (Eigen::Index e = 0; e < impl.elements; ++e) {
    ke.setZero();
    for (int q = 0; q < K::kCorners; ++q) {
      const Eigen::Map<const typename K::Grad> G(impl.grad(e, q));
      const double w = impl.weights[e * K::kCorners + q];
      for (int a = 0; a < K::kCorners; ++a)
        for (int c = 0; c < D; ++c) {
          typename K::MatD unit = K::MatD::Zero();
          unit.row(c) = G.col(a).transpose();
          const Mat3 sigma = tensor.apply(K::embed(unit));
          const typename K::MatD s = sigma.template topLeftCorner<D, D>();
          for (int b = 0; b < K::kCorners; ++b) {
            const typename K::VecD t = s * G.col(b);
            for (int d = 0; d < D; ++d) ke(a * D + c, b * D + d) += w * t[d];
          }
        }
    }
    for (int a = 0; a < K::kCorners; ++a) {
      const Eigen::Index na = impl.corner_nodes[e * K::kCorners + a];
      if (na < free_nodes_offset) continue;
      for (int b = 0; b < K::kCorners; ++b) {
        const Eigen::Index nb = impl.corner_nodes[e * K::kCorners + b];
        if (nb < free_nodes_offset) continue;
        for (int c = 0; c < D; ++c)
          for (int d = 0; d < D; ++d)
            triplets.emplace_back((na - NL) * D + c, (nb - NL) * D + d, ke(a * D + c, b * D + d));
      }
    }
  }
  const Eigen::Index nfree = impl.elements * D;
  Eigen::SparseMatrix<double> Kmat(nfree, nfree);
  Kmat.setFromTriplets(triplets.begin(), triplets.end());
  return Kmat;
}

template <int D>
typename Kernel<D>::MatD element_fluctuation_gradient(const StripOperator::Impl& impl, Eigen::Index e,
                                                      const Eigen::Map<const typename Kernel<D>::Grad>& G,
                                                      const Eigen::VectorXd& nodal) {
  using K = Kernel<D>;
  typename K::MatD A = K::MatD::Zero();
  for (int c = 0; c < K::kCorners; ++c) {
    const Eigen::Index node = impl.corner_nodes[e * K::kCorners + c];
    for (int r = 0; r < D; ++r) A.row(r) += nodal[node * D + r] * G.col(c).transpose();
  }
  return A;
}

template <int D>
Eigen::VectorXd assemble_equilibrium_load(const StripOperator::Impl& impl, const ElasticTensor& tensor,
                                          double e0, Eigen::Index NL, Eigen::Index nfree) {
  using K = Kernel<D>;
  Eigen::VectorXd F = Eigen::VectorXd::Zero(nfree);
  const Mat3 sigma0 = tensor.apply(mismatch_strain(e0, D));
  const typename K::MatD s = sigma0.template topLeftCorner<D, D>();
  for (Eigen::Index e = 0; e < impl.elements; ++e)
    for (int q = 0; q < K::kCorners; ++q) {
      const Eigen::Map<const typename K::Grad> G(impl.grad(e, q));
      const double w = impl.weights[e * K::kCorners + q];
      for (int a = 0; a < K::kCorners; ++a) {
        const Eigen::Index na = impl.corner_nodes[e * K::kCorners + a];
        if (na < NL) continue;
        F.segment<D>((na - NL) * D) -= w * (s * G.col(a));
      }
    }
  return F;
}

template <int D>
double strip_energy(const StripOperator::Impl& impl, const ElasticTensor& tensor, double e0,
                    const Eigen::VectorXd& nodal) {
  using K = Kernel<D>;
  const Mat3 E0 = mismatch_strain(e0, D);
  double total = 0.0;
  for (Eigen::Index e = 0; e < impl.elements; ++e)
    for (int q = 0; q < K::kCorners; ++q) {
      const Eigen::Map<const typename K::Grad> G(impl.grad(e, q));
      const auto A = element_fluctuation_gradient<D>(impl, e, G, nodal);
      total += impl.weights[e * K::kCorners + q] * tensor.energy_density(E0 + K::embed(A));
    }
  return total;
}

template <int D>
Eigen::VectorXd assemble_linearized_load(const StripOperator::Impl& impl, const ElasticTensor& tensor,
                                         const Field& psi, const BulkDisplacement& u, Eigen::Index NL,
                                         Eigen::Index nfree) {
  using K = Kernel<D>;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nfree);
  const Mat3 E0 = mismatch_strain(u.e0, D);
  const auto points = K::top_face_points();
  const double face_weight = 1.0 / (1 << (D - 1));
  const Eigen::Index first_top_element = impl.elements - NL;
  for (Eigen::Index e = first_top_element; e < impl.elements; ++e) {
    std::array<typename K::VecD, K::kCorners> X;
    for (int c = 0; c < K::kCorners; ++c)
      for (int a = 0; a < D; ++a) X[c][a] = impl.corner_coords[(e * K::kCorners + c) * D + a];
    for (const auto& xi : points) {
      const auto Jm = K::jacobian(X, xi);
      const auto G = K::physical_gradients(Jm, xi);
      typename K::VecD normal;
      if constexpr (D == 2) {
        normal << -Jm(1, 0), Jm(0, 0);
      } else {
        const Eigen::Vector3d t0 = Jm.col(0);
        const Eigen::Vector3d t1 = Jm.col(1);
        normal = t0.cross(t1);
      }
      const double area = normal.norm();
      const typename K::VecD nu = normal / area;
      const typename K::MatD P = K::MatD::Identity() - nu * nu.transpose();

      double psi_here = 0.0;
      for (int c = 0; c < K::kCorners; ++c) {
        if (!K::bit(c, D - 1)) continue;
        const Eigen::Index lat = impl.corner_nodes[e * K::kCorners + c] % NL;
        psi_here += psi[lat] * K::shape(c, xi);
      }
      typename K::MatD A = K::MatD::Zero();
      for (int c = 0; c < K::kCorners; ++c) {
        const Eigen::Index node = impl.corner_nodes[e * K::kCorners + c];
        for (int r = 0; r < D; ++r) A.row(r) += u.fluctuation[node * D + r] * G.col(c).transpose();
      }
      const Mat3 sigma = tensor.apply(E0 + K::embed(A));
      const typename K::MatD s = sigma.template topLeftCorner<D, D>();
      const double w = face_weight * area * psi_here;
      for (int a = 0; a < K::kCorners; ++a) {
        const Eigen::Index na = impl.corner_nodes[e * K::kCorners + a];
        if (na < NL) continue;
        b.segment<D>((na - NL) * D) += w * (s * (P * G.col(a)));
      }
    }
  }
  return b;
}

}  // namespace

StripOperator::StripOperator(const HeightField& h, const ElasticTensor& tensor, int m)
    : grid_(h.grid), m_(m), heights_(h.values), tensor_(tensor) {
  require_field_size(h.grid, h.values, "strip operator");
  if (m < 4) throw InvalidInput("strip operator: need at least 4 vertical layers, got " + std::to_string(m));
  if (!h.all_finite()) throw InvalidInput("strip operator: non-finite heights");
  if (!(h.min() > 0.0)) throw DegenerateGeometry("strip operator: film thickness must be positive");
  auto impl = std::make_shared<Impl>();
  if (grid_.surface_dim() == 1) {
    build_elements<2>(grid_, m, heights_, *impl);
    stiffness_ = assemble_stiffness<2>(*impl, tensor_, lateral_count());
  } else {
    build_elements<3>(grid_, m, heights_, *impl);
    stiffness_ = assemble_stiffness<3>(*impl, tensor_, lateral_count());
  }
  impl_ = std::move(impl);
}

Eigen::Index StripOperator::free_dof_count() const {
  return static_cast<Eigen::Index>(m_ - 1) * lateral_count() * bulk_dim();
}

Eigen::VectorXd StripOperator::equilibrium_load(double e0) const {
  if (grid_.surface_dim() == 1)
    return assemble_equilibrium_load<2>(*impl_, tensor_, e0, lateral_count(), free_dof_count());
  return assemble_equilibrium_load<3>(*impl_, tensor_, e0, lateral_count(), free_dof_count());
}

Eigen::VectorXd StripOperator::linearized_load(const Field& psi, const BulkDisplacement& u) const {
  require_field_size(grid_, psi, "linearized load");
  require_same_grid(grid_, u.grid, "linearized load");
  if (u.m != m_) throw GridMismatch("linearized load: vertical layer count differs");
  if (grid_.surface_dim() == 1)
    return assemble_linearized_load<2>(*impl_, tensor_, psi, u, lateral_count(), free_dof_count());
  return assemble_linearized_load<3>(*impl_, tensor_, psi, u, lateral_count(), free_dof_count());
}

Eigen::VectorXd StripOperator::solve(const Eigen::VectorXd& rhs, const SolverOptions& options,
                                     const Eigen::VectorXd* guess, SolveStats& stats) const {
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    stats = {};
    return Eigen::VectorXd::Zero(rhs.size());
  }
  Eigen::VectorXd x;
  if (options.kind == SolverKind::direct) {
    std::call_once(factorize_once_, [this] {
      auto f = std::make_shared<Factorization>();
      f->ldlt.compute(stiffness_);
      factorization_ = std::move(f);
    });
    if (factorization_->ldlt.info() != Eigen::Success) {
      throw SolverFailure("elastic solve: sparse factorization failed", 1.0, 0);
    }
    x = factorization_->ldlt.solve(rhs);
    stats.iterations = 1;
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options.tolerance);
    const long cap = options.max_iterations > 0 ? options.max_iterations : 10 * rhs.size();
    cg.setMaxIterations(cap);
    cg.compute(stiffness_);
    if (guess && guess->size() == rhs.size()) x = cg.solveWithGuess(rhs, *guess);
    else x = cg.solve(rhs);
    stats.iterations = cg.iterations();
  }
  stats.residual = (stiffness_ * x - rhs).norm() / rhs_norm;
  if (!x.allFinite() || !(stats.residual <= std::max(options.tolerance, 1e-13) * 10.0)) {
    throw SolverFailure("elastic solve did not converge (relative residual " +
                            std::to_string(stats.residual) + ")",
                        stats.residual, stats.iterations);
  }
  return x;
}

BulkDisplacement StripOperator::displacement_from_free(const Eigen::VectorXd& free, double e0) const {
  BulkDisplacement u;
  u.grid = grid_;
  u.m = m_;
  u.e0 = e0;
  u.heights = heights_;
  u.fluctuation = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_) * lateral_count() * bulk_dim());
  u.fluctuation.tail(free.size()) = free;
  return u;
}

Eigen::VectorXd StripOperator::free_from_displacement(const BulkDisplacement& u) const {
  return u.fluctuation.tail(free_dof_count());
}

double StripOperator::energy(const BulkDisplacement& u) const {
  require_same_grid(grid_, u.grid, "strip energy");
  if (grid_.surface_dim() == 1) return strip_energy<2>(*impl_, tensor_, u.e0, u.fluctuation);
  return strip_energy<3>(*impl_, tensor_, u.e0, u.fluctuation);
}

double StripOperator::quadratic_energy(const Eigen::VectorXd& free) const {
  return 0.5 * free.dot(stiffness_ * free);
}

void require_film(const HeightField& h, double h_min) {
  if (!h.all_finite()) throw InvalidInput("film height has non-finite samples");
  if (!(h.min() > h_min)) {
    throw DegenerateGeometry("film thickness " + std::to_string(h.min()) + " at or below h_min " +
                             std::to_string(h_min));
  }
}

BulkDisplacement solve_equilibrium(const HeightField& h, const ElasticSetup& setup,
                                   const BulkDisplacement* warm_start) {
  StripOperator op(h, setup.tensor, setup.m);
  const Eigen::VectorXd load = op.equilibrium_load(setup.e0);
  Eigen::VectorXd guess;
  const Eigen::VectorXd* guess_ptr = nullptr;
  if (warm_start && warm_start->grid == h.grid && warm_start->m == setup.m &&
      warm_start->fluctuation.size() == op.free_dof_count() + op.lateral_count() * op.bulk_dim()) {
    guess = op.free_from_displacement(*warm_start);
    // Rescale so that a change of e0 alone does not spoil the guess.
    if (warm_start->e0 != 0.0) guess *= setup.e0 / warm_start->e0;
    guess_ptr = &guess;
  }
  SolveStats stats;
  const Eigen::VectorXd x = op.solve(load, setup.solver, guess_ptr, stats);
  BulkDisplacement u = op.displacement_from_free(x, setup.e0);
  u.stats = stats;
  return u;
}

namespace {

// Physical gradient of the fluctuation at a node from second-order differences on the
// mapped grid: lateral central differences at fixed s, vertical three-point stencils.
Mat3 recovered_gradient(const BulkDisplacement& u, const Field& h, Eigen::Index lat, int layer) {
  const Grid& grid = u.grid;
  const int D = u.bulk_dim();
  const double dx = grid.spacing();
  const double ds = 1.0 / (u.m - 1);
  const double s = u.layer_coordinate(layer);

  Eigen::Vector3d du_ds;
  if (layer == u.m - 1) {
    du_ds = (3.0 * u.fluctuation_at(lat, layer) - 4.0 * u.fluctuation_at(lat, layer - 1) +
             u.fluctuation_at(lat, layer - 2)) / (2.0 * ds);
  } else if (layer == 0) {
    du_ds = (-3.0 * u.fluctuation_at(lat, 0) + 4.0 * u.fluctuation_at(lat, 1) -
             u.fluctuation_at(lat, 2)) / (2.0 * ds);
  } else {
    du_ds = (u.fluctuation_at(lat, layer + 1) - u.fluctuation_at(lat, layer - 1)) / (2.0 * ds);
  }

  Mat3 grad = Mat3::Zero();
  for (int a = 0; a < D - 1; ++a) {
    const Eigen::Index plus = shift_lateral(grid, lat, a, 1);
    const Eigen::Index minus = shift_lateral(grid, lat, a, -1);
    const Eigen::Vector3d du_da = (u.fluctuation_at(plus, layer) - u.fluctuation_at(minus, layer)) / (2.0 * dx);
    const double dh_da = (h[plus] - h[minus]) / (2.0 * dx);
    grad.col(a) = du_da - (s * dh_da / h[lat]) * du_ds;
  }
  grad.col(D - 1) = du_ds / h[lat];
  return grad;
}

}  // namespace

ElasticTrace boundary_traces(const BulkDisplacement& u, const HeightField& h, const ElasticTensor& tensor) {
  require_same_grid(u.grid, h.grid, "boundary_traces");
  if (u.heights.size() != h.values.size() || (u.heights - h.values).cwiseAbs().maxCoeff() > 0.0) {
    throw GridMismatch("boundary_traces: displacement was solved for a different height field");
  }
  const Grid& grid = h.grid;
  const int D = u.bulk_dim();
  const Eigen::Index NL = u.lateral_count();
  const int top = u.m - 1;
  const double ds = 1.0 / (u.m - 1);
  const double dx = grid.spacing();
  const Mat3 E0 = mismatch_strain(u.e0, D);

  ElasticTrace trace;
  trace.q.resize(NL);
  trace.dq_dn.resize(NL);
  trace.traction.resize(NL);
  trace.stress.resize(NL);

  std::array<Field, 3> q_layers;
  for (int k = 0; k < 3; ++k) {
    q_layers[k].resize(NL);
    for (Eigen::Index lat = 0; lat < NL; ++lat) {
      const Mat3 strain = E0 + recovered_gradient(u, h.values, lat, top - k);
      q_layers[k][lat] = tensor.energy_density(strain);
      if (k == 0) trace.stress[lat] = tensor.apply(strain);
    }
  }
  trace.q = q_layers[0];

  for (Eigen::Index lat = 0; lat < NL; ++lat) {
    const double hh = h.values[lat];
    const double dq_ds = (3.0 * q_layers[0][lat] - 4.0 * q_layers[1][lat] + q_layers[2][lat]) / (2.0 * ds);
    Eigen::Vector3d grad_h = Eigen::Vector3d::Zero();
    Eigen::Vector3d grad_q = Eigen::Vector3d::Zero();
    for (int a = 0; a < D - 1; ++a) {
      const Eigen::Index plus = shift_lateral(grid, lat, a, 1);
      const Eigen::Index minus = shift_lateral(grid, lat, a, -1);
      grad_h[a] = (h.values[plus] - h.values[minus]) / (2.0 * dx);
      const double dq_da = (q_layers[0][plus] - q_layers[0][minus]) / (2.0 * dx);
      grad_q[a] = dq_da - (grad_h[a] / hh) * dq_ds;
    }
    grad_q[D - 1] = dq_ds / hh;
    Eigen::Vector3d nu = -grad_h;
    nu[D - 1] = 1.0;
    nu /= std::sqrt(1.0 + grad_h.squaredNorm());
    trace.dq_dn[lat] = nu.dot(grad_q);
    trace.traction[lat] = (trace.stress[lat] * nu).head(D).norm();
  }
  return trace;
}

double bulk_energy(const BulkDisplacement& u, const HeightField& h, const ElasticTensor& tensor) {
  require_same_grid(u.grid, h.grid, "bulk_energy");
  StripOperator op(h, tensor, u.m);
  return op.energy(u);
}

BulkDisplacement solve_linearized(const Field& psi, const BulkDisplacement& u, const HeightField& h,
                                  const ElasticSetup& setup) {
  StripOperator op(h, setup.tensor, u.m);
  const Eigen::VectorXd load = op.linearized_load(psi, u);
  SolveStats stats;
  const Eigen::VectorXd x = op.solve(load, setup.solver, nullptr, stats);
  BulkDisplacement out = op.displacement_from_free(x, 0.0);
  out.stats = stats;
  return out;
}

Equilibrium solve_state(const HeightField& h, const ElasticSetup& setup, const BulkDisplacement* warm_start) {
  Equilibrium eq;
  eq.h = h;
  if (setup.e0 == 0.0) {
    if (setup.m < 4) throw InvalidInput("strip operator: need at least 4 vertical layers");
    if (!h.all_finite()) throw InvalidInput("film height has non-finite samples");
    const Eigen::Index NL = static_cast<Eigen::Index>(h.grid.size());
    const int D = h.grid.surface_dim() + 1;
    eq.u.grid = h.grid;
    eq.u.m = setup.m;
    eq.u.e0 = 0.0;
    eq.u.heights = h.values;
    eq.u.fluctuation = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(setup.m) * NL * D);
    eq.trace.q = Field::Zero(NL);
    eq.trace.dq_dn = Field::Zero(NL);
    eq.trace.traction = Field::Zero(NL);
    eq.trace.stress.assign(static_cast<std::size_t>(NL), Mat3::Zero());
    eq.bulk_energy = 0.0;
    return eq;
  }
  StripOperator op(h, setup.tensor, setup.m);
  const Eigen::VectorXd load = op.equilibrium_load(setup.e0);
  Eigen::VectorXd guess;
  const Eigen::VectorXd* guess_ptr = nullptr;
  if (warm_start && warm_start->grid == h.grid && warm_start->m == setup.m && warm_start->e0 != 0.0) {
    guess = op.free_from_displacement(*warm_start) * (setup.e0 / warm_start->e0);
    guess_ptr = &guess;
  }
  SolveStats stats;
  const Eigen::VectorXd x = op.solve(load, setup.solver, guess_ptr, stats);
  eq.u = op.displacement_from_free(x, setup.e0);
  eq.u.stats = stats;
  eq.trace = boundary_traces(eq.u, h, setup.tensor);
  eq.bulk_energy = op.energy(eq.u);
  return eq;
}

double flat_film_vertical_strain(const ElasticTensor& tensor, double e0, int bulk_dim) {
  const int v = bulk_dim - 1;
  Mat3 unit = Mat3::Zero();
  unit(v, v) = 1.0;
  const double response = tensor.apply(unit)(v, v);
  return -tensor.apply(mismatch_strain(e0, bulk_dim))(v, v) / response;
}

double flat_film_energy_density(const ElasticTensor& tensor, double e0, int bulk_dim) {
  Mat3 E = mismatch_strain(e0, bulk_dim);
  E(bulk_dim - 1, bulk_dim - 1) = flat_film_vertical_strain(tensor, e0, bulk_dim);
  return tensor.energy_density(E);
}

}  // namespace elastoflow::elasticity
