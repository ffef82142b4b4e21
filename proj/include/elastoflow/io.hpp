#pragma once

#include "elastoflow/diagnostics.hpp"
#include "elastoflow/grid.hpp"
#include "elastoflow/stability.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace elastoflow::io {

/// Header line of trajectory.csv.
inline constexpr const char* kTrajectoryHeader =
    "t,volume,energy_bulk,energy_surface,energy_total,lyapunov,stationarity_residual,h_dev_l2,d_distance,tau,"
    "coupling_iters";

inline constexpr const char* kScanHeader = "d,min_eig_L2,min_eig_H1";

/// Shortest round-tripping decimal form with 17 significant digits.
std::string format_double(double value);

void write_trajectory_csv(std::ostream& out, const std::vector<diagnostics::DiagnosticsRow>& rows);
void write_trajectory_csv(const std::string& path, const std::vector<diagnostics::DiagnosticsRow>& rows);

void write_scan_csv(std::ostream& out, const std::vector<stability::ScanRow>& rows);
void write_scan_csv(const std::string& path, const std::vector<stability::ScanRow>& rows);

/// Binary height snapshot: "ELFH", u32 version, u32 surface_dim, u32 n0, u32 n1, u32 pad,
/// f64 t, then the samples as little-endian f64 in row-major order.
struct HeightSnapshot {
  HeightField h;
  double t = 0.0;
};

inline constexpr std::uint32_t kHeightFormatVersion = 1;

void write_height(std::ostream& out, const HeightField& h, double t);
void write_height(const std::string& path, const HeightField& h, double t);
HeightSnapshot read_height(std::istream& in);
HeightSnapshot read_height(const std::string& path);

/// "height_0007.bin" for index 7.
std::string checkpoint_name(int index);

}  // namespace elastoflow::io
