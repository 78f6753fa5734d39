#include "dronerad/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dronerad/dbscan.hpp"
#include "dronerad/errors.hpp"
#include "dronerad/fft.hpp"
#include "dronerad/peak.hpp"

namespace dronerad {
namespace {

double omega_to_direction_cosine(double omega, const VirtualArrayLayout& layout, const RadarConfig& cfg) {
  return std::sin(phase_to_angle(omega, layout.spacing, cfg));
}

}  // namespace

Vec3 direction_to_point(double range, double ux, double uz) {
  const double uy = std::sqrt(std::max(0.0, 1.0 - ux * ux - uz * uz));
  return {range * ux, range * uy, range * uz};
}

PointCloud point_cloud(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                       const PointCloudParams& params, std::vector<Detection>* detections) {
  const auto map = doppler_fft(clutter_removal(range_fft(cube, params.range_fft)));
  auto dets = cfar_2d(map, cfg, params.cfar);
  PointCloud cloud;
  cloud.reserve(dets.size());
  for (const auto& d : dets) {
    const auto snapshot = map.spectra.fiber(d.doppler_bin, d.range_bin);
    AngleEstimate a;
    try {
      a = aoa_fft(snapshot, layout, cfg, params.angle_fft);
    } catch (const DomainError&) {
      continue;
    }
    const double ux = std::sin(a.azimuth);
    const double uz = std::sin(a.elevation);
    if (ux * ux + uz * uz >= 1.0) {
      continue;
    }
    const Vec3 p = direction_to_point(d.range, ux, uz);
    cloud.push_back({p.x, p.y, p.z, d.radial_velocity, map.values(d.doppler_bin, d.range_bin)});
  }
  if (detections != nullptr) {
    *detections = std::move(dets);
  }
  return cloud;
}

Vec3 largest_cluster_centroid(std::span<const Vec3> pts, double eps, std::size_t min_pts) {
  const auto labels = dbscan(pts, eps, min_pts);
  const auto sizes = cluster_sizes(labels);
  if (sizes.empty()) {
    throw NoTargetError("no DBSCAN cluster");
  }
  const int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  Vec3 sum;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (labels[i] == largest) {
      sum += pts[i];
    }
  }
  return sum * (1.0 / static_cast<double>(sizes[static_cast<std::size_t>(largest)]));
}

std::string detections_to_csv(std::span<const FrameDetections> frames) {
  std::string out = "frame,range_bin,doppler_bin,range_m,velocity_mps,snr_db\n";
  char line[160];
  for (const auto& f : frames) {
    for (const auto& d : f.detections) {
      std::snprintf(line, sizeof line, "%zu,%zu,%zu,%.9g,%.9g,%.6g\n", f.frame_index, d.range_bin, d.doppler_bin,
                    d.range, d.radial_velocity, d.snr_db);
      out += line;
    }
  }
  return out;
}

PositionEstimate locate_point_cloud(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                                    const PointCloudParams& params) {
  const auto cloud = point_cloud(cube, cfg, layout, params);
  if (cloud.empty()) {
    throw NoTargetError("no CFAR detections");
  }
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud) {
    pts.push_back({p.x, p.y, p.z});
  }
  const Vec3 c = largest_cluster_centroid(pts, params.dbscan_eps, params.dbscan_min_pts);
  return {c.x, c.y, c.z, cube.timestamp};
}

Matrix<cdouble> clutter_removed_chirp(const DataCube& cube, std::size_t chirp) {
  if (cube.chirps() < 2) {
    throw ConfigError("clutter removal needs at least 2 chirps");
  }
  if (chirp >= cube.chirps()) {
    throw ConfigError("chirp index out of range");
  }
  const std::size_t plane = cube.samples() * cube.antennas();
  Matrix<cdouble> out(cube.samples(), cube.antennas());
  auto o = out.data();
  for (std::size_t c = 0; c < cube.chirps(); ++c) {
    const auto s = cube.values().slab(c);
    for (std::size_t j = 0; j < plane; ++j) {
      o[j] -= s[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(cube.chirps());
  const auto target = cube.values().slab(chirp);
  for (std::size_t j = 0; j < plane; ++j) {
    o[j] = target[j] + o[j] * inv;
  }
  return out;
}

Matrix<cdouble> chirp_range_fft(const Matrix<cdouble>& chirp, std::size_t nfft) {
  const std::size_t ns = chirp.rows();
  const std::size_t nva = chirp.cols();
  if (nfft < ns) {
    throw ConfigError("range FFT size is smaller than the chirp length");
  }
  const auto window = hann_window(ns);
  Matrix<cdouble> out(nfft, nva);
  std::vector<cdouble> in(nfft), spec(nfft);
  for (std::size_t v = 0; v < nva; ++v) {
    for (std::size_t n = 0; n < ns; ++n) {
      in[n] = chirp(n, v) * window[n];
    }
    std::fill(in.begin() + static_cast<std::ptrdiff_t>(ns), in.end(), cdouble{});
    fft_forward(in, spec);
    for (std::size_t k = 0; k < nfft; ++k) {
      out(k, v) = spec[k];
    }
  }
  return out;
}

Fft2dMaps fft_2d_maps(const DataCube& cube, const VirtualArrayLayout& layout, const FftParams& params) {
  const auto profile = chirp_range_fft(clutter_removed_chirp(cube, params.chirp), params.range_fft);
  const std::size_t nr = params.range_fft / 2;
  const std::size_t na = params.angle_fft;
  const auto aperture = layout.azimuth_aperture();
  Fft2dMaps maps{Matrix<double>(nr, na), Matrix<double>(nr, na)};
  std::vector<cdouble> twiddle(na);
  for (std::size_t k = 0; k < na; ++k) {
    twiddle[k] = std::polar(1.0, -angle_bin_to_omega(k, na));
  }
  std::array<cdouble, 8> x;
  std::vector<cdouble> spec(na);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t i = 0; i < aperture.size(); ++i) {
      x[i] = profile(r, aperture[i]);
    }
    angle_spectrum(x, spec);
    for (std::size_t k = 0; k < na; ++k) {
      maps.azimuth(r, k) = std::norm(spec[k]);
    }
    for (const auto& [lo, hi] : layout.elevation_pairs) {
      const cdouble a = profile(r, lo);
      const cdouble b = profile(r, hi);
      for (std::size_t k = 0; k < na; ++k) {
        maps.elevation(r, k) += std::norm(a + b * twiddle[k]);
      }
    }
  }
  return maps;
}

PositionEstimate locate_fft_2d(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                               const FftParams& params) {
  const auto maps = fft_2d_maps(cube, layout, params);
  const std::array<std::size_t, 3> dims{maps.azimuth.rows(), maps.azimuth.cols(), 1};
  const auto az_peak = find_peak(maps.azimuth.data(), dims, PeakScale::power, params.tie_db);
  const auto el_peak = find_peak(maps.elevation.data(), dims, PeakScale::power, params.tie_db);
  const double range = range_bin_to_m(az_peak[0], params.range_fft, cfg);
  const double ux = omega_to_direction_cosine(angle_bin_to_omega(az_peak[1], params.angle_fft), layout, cfg);
  const double uz = omega_to_direction_cosine(angle_bin_to_omega(el_peak[1], params.angle_fft), layout, cfg);
  const Vec3 p = direction_to_point(range, ux, uz);
  return {p.x, p.y, p.z, cube.timestamp};
}

std::vector<double> fft_3d_volume(const DataCube& cube, const VirtualArrayLayout& layout, const FftParams& params) {
  const auto profile = chirp_range_fft(clutter_removed_chirp(cube, params.chirp), params.range_fft);
  const std::size_t nr = params.range_fft / 2;
  const std::size_t na = params.angle_fft;
  int max_x = 0;
  int max_z = 0;
  for (const auto& p : layout.positions) {
    if (p.x < 0 || p.z < 0) {
      throw ConfigError("3D FFT expects non-negative VA grid positions");
    }
    max_x = std::max(max_x, p.x);
    max_z = std::max(max_z, p.z);
  }
  const auto nx = static_cast<std::size_t>(max_x + 1);
  const auto nz = static_cast<std::size_t>(max_z + 1);
  if (nx > na) {
    throw ConfigError("angle FFT shorter than the horizontal aperture");
  }
  // Elevation phase factors exp(-j omega_z z) for every elevation bin and row.
  Matrix<cdouble> zphase(na, nz);
  for (std::size_t k = 0; k < na; ++k) {
    for (std::size_t z = 0; z < nz; ++z) {
      zphase(k, z) = std::polar(1.0, -angle_bin_to_omega(k, na) * static_cast<double>(z));
    }
  }
  std::vector<double> volume(nr * na * na);
  Matrix<cdouble> rows(nz, na);
  std::vector<cdouble> grid(nx);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t z = 0; z < nz; ++z) {
      std::fill(grid.begin(), grid.end(), cdouble{});
      for (std::size_t v = 0; v < kVirtualAntennas; ++v) {
        if (static_cast<std::size_t>(layout.positions[v].z) == z) {
          grid[static_cast<std::size_t>(layout.positions[v].x)] = profile(r, v);
        }
      }
      angle_spectrum(grid, rows.row(z));
    }
    double* out = volume.data() + r * na * na;
    for (std::size_t kx = 0; kx < na; ++kx) {
      for (std::size_t kz = 0; kz < na; ++kz) {
        cdouble acc{};
        for (std::size_t z = 0; z < nz; ++z) {
          acc += rows(z, kx) * zphase(kz, z);
        }
        out[kx * na + kz] = std::norm(acc);
      }
    }
  }
  return volume;
}

PositionEstimate locate_fft_3d(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                               const FftParams& params) {
  const auto volume = fft_3d_volume(cube, layout, params);
  const std::size_t na = params.angle_fft;
  const auto peak = find_peak(volume, {params.range_fft / 2, na, na}, PeakScale::power, params.tie_db);
  const double range = range_bin_to_m(peak[0], params.range_fft, cfg);
  const double ux = omega_to_direction_cosine(angle_bin_to_omega(peak[1], na), layout, cfg);
  const double uz = omega_to_direction_cosine(angle_bin_to_omega(peak[2], na), layout, cfg);
  const Vec3 p = direction_to_point(range, ux, uz);
  return {p.x, p.y, p.z, cube.timestamp};
}

}  // namespace dronerad
