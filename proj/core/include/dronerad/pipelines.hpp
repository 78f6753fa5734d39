#pragma once

// Classical single-target localizers: CFAR point cloud + DBSCAN, and 2D / 3D FFT heatmaps.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dronerad/dsp.hpp"
#include "dronerad/radar_model.hpp"

namespace dronerad {

struct CloudPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double radial_velocity = 0.0;  // m/s
  double intensity = 0.0;        // detection power
};

using PointCloud = std::vector<CloudPoint>;

struct PointCloudParams {
  std::size_t range_fft = kDefaultRangeFft;
  std::size_t angle_fft = kDefaultAngleFft;
  CfarParams cfar;
  double dbscan_eps = 0.25;  // m
  std::size_t dbscan_min_pts = 3;
};

/// range FFT -> clutter removal -> Doppler FFT -> CFAR -> per-detection angle FFT -> Cartesian.
/// Detections whose angles fall outside the visible hemisphere are skipped.
PointCloud point_cloud(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                       const PointCloudParams& params = {}, std::vector<Detection>* detections = nullptr);

/// Centroid of the largest DBSCAN cluster (lowest label on equal sizes). Throws NoTargetError
/// when every point is noise.
Vec3 largest_cluster_centroid(std::span<const Vec3> points, double eps, std::size_t min_pts);

/// Centroid of the largest DBSCAN cluster. Throws NoTargetError without detections or clusters.
PositionEstimate locate_point_cloud(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                                    const PointCloudParams& params = {});

/// CFAR detections of one frame.
struct FrameDetections {
  std::size_t frame_index = 0;
  std::vector<Detection> detections;
};

/// Header `frame,range_bin,doppler_bin,range_m,velocity_mps,snr_db`, one row per detection.
std::string detections_to_csv(std::span<const FrameDetections> frames);

struct FftParams {
  std::size_t range_fft = kDefaultRangeFft;
  std::size_t angle_fft = kDefaultAngleFft;
  std::size_t chirp = 0;  // chirp used after frame-level clutter removal
  double tie_db = 0.1;
};

/// Chirp `chirp` minus the frame's chirp mean, as a [sample][VA] matrix.
Matrix<cdouble> clutter_removed_chirp(const DataCube& cube, std::size_t chirp);

/// Hann-windowed range FFT of a [sample][VA] chirp: [range bin][VA].
Matrix<cdouble> chirp_range_fft(const Matrix<cdouble>& chirp, std::size_t nfft);

struct Fft2dMaps {
  Matrix<double> azimuth;    // [range bin][angle bin] power over the 8-VA aperture
  Matrix<double> elevation;  // [range bin][angle bin] power summed over the vertical pairs
};

/// Heatmaps over the unambiguous range bins [0, nfft/2).
Fft2dMaps fft_2d_maps(const DataCube& cube, const VirtualArrayLayout& layout, const FftParams& params = {});

/// Range and azimuth from the range-azimuth global maximum, elevation from the range-elevation
/// global maximum. Throws NoTargetError for a frame without moving returns.
PositionEstimate locate_fft_2d(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                               const FftParams& params = {});

/// Joint power over (range bin, azimuth bin, elevation bin), range bins [0, nfft/2).
std::vector<double> fft_3d_volume(const DataCube& cube, const VirtualArrayLayout& layout, const FftParams& params = {});

PositionEstimate locate_fft_3d(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                               const FftParams& params = {});

/// Cartesian point from range and direction cosines; the forward component is clamped at 0.
Vec3 direction_to_point(double range, double ux, double uz);

}  // namespace dronerad
