#include "elastoflow/io.hpp"

#include "elastoflow/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace elastoflow::io {

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!in) throw InvalidInput("height snapshot: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const std::vector<diagnostics::DiagnosticsRow>& rows) {
  out << kTrajectoryHeader << '\n';
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << format_double(r.volume) << ',' << format_double(r.energy_bulk) << ','
        << format_double(r.energy_surface) << ',' << format_double(r.energy_total) << ','
        << format_double(r.lyapunov) << ',' << format_double(r.stationarity_residual) << ','
        << format_double(r.h_dev_l2) << ',' << format_double(r.d_distance) << ',' << format_double(r.tau) << ','
        << r.coupling_iters << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const std::vector<diagnostics::DiagnosticsRow>& rows) {
  auto out = open_out(path);
  write_trajectory_csv(out, rows);
}

void write_scan_csv(std::ostream& out, const std::vector<stability::ScanRow>& rows) {
  out << kScanHeader << '\n';
  for (const auto& r : rows) {
    out << format_double(r.d) << ',' << format_double(r.min_eig_l2) << ',' << format_double(r.min_eig_h1) << '\n';
  }
}

void write_scan_csv(const std::string& path, const std::vector<stability::ScanRow>& rows) {
  auto out = open_out(path);
  write_scan_csv(out, rows);
}

void write_height(std::ostream& out, const HeightField& h, double t) {
  const auto n = static_cast<std::uint32_t>(h.grid.n());
  out.write("ELFH", 4);
  put_le<std::uint32_t>(out, kHeightFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.grid.surface_dim()));
  put_le<std::uint32_t>(out, n);
  put_le<std::uint32_t>(out, h.grid.surface_dim() == 2 ? n : 1u);
  put_le<std::uint32_t>(out, 0u);
  put_le<double>(out, t);
  for (Eigen::Index i = 0; i < h.values.size(); ++i) put_le<double>(out, h.values[i]);
}

void write_height(const std::string& path, const HeightField& h, double t) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  write_height(out, h, t);
  if (!out) throw Error("failed writing '" + path + "'");
}

HeightSnapshot read_height(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "ELFH", 4) != 0) throw InvalidInput("height snapshot: bad magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kHeightFormatVersion) throw InvalidInput("height snapshot: unsupported version");
  const auto dim = get_le<std::uint32_t>(in);
  const auto n0 = get_le<std::uint32_t>(in);
  const auto n1 = get_le<std::uint32_t>(in);
  get_le<std::uint32_t>(in);
  HeightSnapshot snap;
  snap.t = get_le<double>(in);
  if (dim != 1 && dim != 2) throw InvalidInput("height snapshot: bad dimension");
  if ((dim == 1 && n1 != 1) || (dim == 2 && n1 != n0)) throw InvalidInput("height snapshot: bad extents");
  const Grid grid(static_cast<int>(dim), static_cast<int>(n0));
  Field values(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = get_le<double>(in);
  snap.h = HeightField(grid, values);
  return snap;
}

HeightSnapshot read_height(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_height(in);
}

std::string checkpoint_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "height_%04d.bin", index);
  return buf;
}

}  // namespace elastoflow::io
