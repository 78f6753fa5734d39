#pragma once

// MUSIC pseudospectrum localization over a (range, azimuth, elevation) sweep grid.
//
// Snapshots are the clutter-removed chirps in range-FFT beamspace: the Hann-windowed range
// spectrum restricted to the bins covering the swept ranges. A joint-range steering vector is
// the same transform applied to the sample-domain Kronecker steering vector, so the
// pseudospectrum is the sample-domain one expressed in a reduced basis.

#include <cstddef>
#include <span>
#include <vector>

#include "dronerad/array.hpp"
#include "dronerad/parallel.hpp"
#include "dronerad/radar_model.hpp"

namespace dronerad {

struct SweepGrid {
  std::vector<double> ranges;      // m
  std::vector<double> azimuths;    // deg, 90 = boresight
  std::vector<double> elevations;  // deg, 0 = boresight

  /// ranges 1.0:0.1:4.0, azimuths 30:1:150, elevations -15:1:15.
  static SweepGrid standard();
  static std::vector<double> linspace_step(double first, double last, double step);

  /// Strictly increasing, non-empty, ranges positive, angles inside the visible region.
  void validate() const;
};

struct CovarianceMatrix {
  Matrix<cdouble> values;
  std::size_t snapshot_count = 0;
};

/// (1/K) sum_k x_k x_k^H. Throws ConfigError on empty or ragged input.
CovarianceMatrix covariance(std::span<const std::vector<cdouble>> snapshots);

/// Orthonormal eigenvectors (columns) of the n - n_sources smallest eigenvalues.
Matrix<cdouble> noise_subspace(const CovarianceMatrix& cov, std::size_t n_sources);

enum class SteeringMode { angle_only, joint_range };

struct GridPoint {
  double range = 0.0;      // m
  double azimuth = 0.0;    // rad, direction-cosine azimuth (0 = boresight)
  double elevation = 0.0;  // rad
};

/// angle_only: 12 unit-modulus VA phases. joint_range: samples x VAs (index n * 12 + v) with the
/// fast-time beat tone exp(j 2 pi f_b n / fs). Throws DomainError outside the visible region.
std::vector<cdouble> steering_vector(const GridPoint& point, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                                     SteeringMode mode);

/// 1 / (a^H E E^H a) for a unit-norm a, in dB.
double music_pseudospectrum_db(std::span<const cdouble> a, const Matrix<cdouble>& noise_basis);

struct MusicParams {
  std::size_t n_sources = 1;
  std::size_t workers = default_workers();
  std::size_t range_fft = 256;
  std::size_t range_margin_bins = 4;
  double tie_db = 0.1;
};

struct MusicEstimate {
  PositionEstimate position;
  GridPoint grid_point;  // direction-cosine angles of the chosen cell
  bool regularized = false;  // fewer snapshots than dimensions: diagonal loading applied
  double peak_db = 0.0;
};

/// Range-azimuth pseudospectrum [range][azimuth] and range-elevation pseudospectrum [range][elevation], dB.
struct Music2dSpectra {
  Matrix<double> range_azimuth;
  Matrix<double> range_elevation;
  bool regularized = false;
};

Music2dSpectra music_2d_spectra(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                                const SweepGrid& grid, const MusicParams& params = {});

/// Joint pseudospectrum [range][azimuth][elevation], dB.
struct Music3dSpectrum {
  Cube<double> values;
  bool regularized = false;
};

Music3dSpectrum music_3d_spectrum(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                                  const SweepGrid& grid, const MusicParams& params = {});

/// Range and azimuth from the range-azimuth spectrum, elevation from the range-elevation one.
MusicEstimate locate_music_2d(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                              const SweepGrid& grid = SweepGrid::standard(), const MusicParams& params = {});

MusicEstimate locate_music_3d(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                              const SweepGrid& grid = SweepGrid::standard(), const MusicParams& params = {});

}  // namespace dronerad
