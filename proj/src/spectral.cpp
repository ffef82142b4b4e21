#include "elastoflow/spectral.hpp"

#include "elastoflow/error.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>

namespace elastoflow {

namespace {

// FFTW planning is not thread-safe; plan execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct AxisTap {
  int index;
  double weight;
};

// Source taps feeding one target frequency index along a single axis.
std::vector<AxisTap> axis_taps(int target_index, int n_target, int n_source) {
  const int k = target_index <= n_target / 2 ? target_index : target_index - n_target;
  auto source_index = [n_source](int kk) { return kk >= 0 ? kk : kk + n_source; };
  if (n_target == n_source) return {{target_index, 1.0}};
  if (n_target > n_source) {
    if (std::abs(k) < n_source / 2) return {{source_index(k), 1.0}};
    if (std::abs(k) == n_source / 2) return {{n_source / 2, 0.5}};
    return {};
  }
  if (std::abs(k) < n_target / 2) return {{source_index(k), 1.0}};
  return {};
}

}  // namespace

const Spectral& Spectral::for_grid(const Grid& grid) {
  static std::mutex cache_mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<Spectral>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[{grid.surface_dim(), grid.n()}];
  if (!slot) slot.reset(new Spectral(grid));
  return *slot;
}

Spectral::Spectral(const Grid& grid) : grid_(grid) {
  std::lock_guard lock(planner_mutex());
  std::vector<std::complex<double>> scratch(grid.size());
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (grid.surface_dim() == 1) {
    plan_forward_ = fftw_plan_dft_1d(grid.n(), buf, buf, FFTW_FORWARD, flags);
    plan_backward_ = fftw_plan_dft_1d(grid.n(), buf, buf, FFTW_BACKWARD, flags);
  } else {
    plan_forward_ = fftw_plan_dft_2d(grid.n(), grid.n(), buf, buf, FFTW_FORWARD, flags);
    plan_backward_ = fftw_plan_dft_2d(grid.n(), grid.n(), buf, buf, FFTW_BACKWARD, flags);
  }
}

Spectral::~Spectral() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
}

void Spectral::execute(std::vector<std::complex<double>>& data, bool forward) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(forward ? plan_forward_ : plan_backward_), buf, buf);
}

Coefficients Spectral::forward(const Field& f) const {
  require_field_size(grid_, f, "spectral forward");
  Coefficients c(f.data(), f.data() + f.size());
  execute(c, true);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (auto& v : c) v *= scale;
  return c;
}

Field Spectral::inverse(const Coefficients& c) const {
  if (c.size() != grid_.size()) throw GridMismatch("spectral inverse: coefficient count");
  Coefficients work = c;
  execute(work, false);
  Field f(static_cast<Eigen::Index>(work.size()));
  for (std::size_t i = 0; i < work.size(); ++i) f[static_cast<Eigen::Index>(i)] = work[i].real();
  return f;
}

Field Spectral::apply(const Field& f, const Symbol& symbol) const {
  Coefficients c = forward(f);
  const int n = grid_.n();
  if (grid_.surface_dim() == 1) {
    for (int i = 0; i < n; ++i) c[i] *= symbol(grid_.wavenumber(i), 0, grid_.is_nyquist(i), false);
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        c[i * n + j] *= symbol(grid_.wavenumber(i), grid_.wavenumber(j), grid_.is_nyquist(i),
                               grid_.is_nyquist(j));
  }
  return inverse(c);
}

Field Spectral::derivative(const Field& f, int axis) const {
  if (axis < 0 || axis >= grid_.surface_dim()) throw InvalidInput("derivative: bad axis");
  return apply(f, [axis](int k1, int k2, bool n1, bool n2) -> std::complex<double> {
    const int k = axis == 0 ? k1 : k2;
    const bool nyq = axis == 0 ? n1 : n2;
    if (nyq) return 0.0;
    return {0.0, kTwoPi * k};
  });
}

Field Spectral::second_derivative(const Field& f, int a, int b) const {
  if (a < 0 || b < 0 || a >= grid_.surface_dim() || b >= grid_.surface_dim()) {
    throw InvalidInput("second_derivative: bad axis");
  }
  if (a == b) {
    return apply(f, [a](int k1, int k2, bool, bool) -> std::complex<double> {
      const double w = kTwoPi * (a == 0 ? k1 : k2);
      return -w * w;
    });
  }
  return apply(f, [](int k1, int k2, bool n1, bool n2) -> std::complex<double> {
    if (n1 || n2) return 0.0;
    return -(kTwoPi * k1) * (kTwoPi * k2);
  });
}

Field Spectral::laplacian(const Field& f) const {
  return apply(f, [](int k1, int k2, bool, bool) -> std::complex<double> {
    return -kTwoPi * kTwoPi * static_cast<double>(k1 * k1 + k2 * k2);
  });
}

Field Spectral::bilaplacian(const Field& f) const {
  return apply(f, [](int k1, int k2, bool, bool) -> std::complex<double> {
    const double w2 = kTwoPi * kTwoPi * static_cast<double>(k1 * k1 + k2 * k2);
    return w2 * w2;
  });
}

Field Spectral::resample(const Field& f, const Grid& target) const {
  if (target.surface_dim() != grid_.surface_dim()) throw GridMismatch("resample: dimension");
  if (target == grid_) return f;
  const Coefficients src = forward(f);
  const int ns = grid_.n();
  const int nt = target.n();
  Coefficients dst(target.size(), 0.0);
  if (grid_.surface_dim() == 1) {
    for (int i = 0; i < nt; ++i)
      for (const auto& tap : axis_taps(i, nt, ns)) dst[i] += tap.weight * src[tap.index];
  } else {
    for (int i = 0; i < nt; ++i) {
      const auto taps_i = axis_taps(i, nt, ns);
      if (taps_i.empty()) continue;
      for (int j = 0; j < nt; ++j)
        for (const auto& tj : axis_taps(j, nt, ns))
          for (const auto& ti : taps_i)
            dst[i * nt + j] += ti.weight * tj.weight * src[ti.index * ns + tj.index];
    }
  }
  return Spectral::for_grid(target).inverse(dst);
}

double cell_mean(const Field& f) { return f.mean(); }

}  // namespace elastoflow
