#pragma once

// Range / Doppler / angle transforms, clutter removal and cell-averaging CFAR.

#include <cstddef>
#include <span>
#include <vector>

#include "dronerad/array.hpp"
#include "dronerad/radar_model.hpp"

namespace dronerad {

inline constexpr std::size_t kDefaultRangeFft = 256;
inline constexpr std::size_t kDefaultAngleFft = 180;

/// Complex range profiles indexed [chirp][range bin][VA].
using RangeProfiles = Cube<cdouble>;

/// Hann-windowed, zero-padded FFT along the sample axis of every chirp. Throws ConfigError
/// when nfft < samples per chirp.
RangeProfiles range_fft(const DataCube& cube, std::size_t nfft = kDefaultRangeFft);
/// Same transform restricted to `chirps`; output row i holds chirp chirps[i].
RangeProfiles range_fft(const DataCube& cube, std::span<const std::size_t> chirps,
                        std::size_t nfft = kDefaultRangeFft);

/// Subtracts the per (range bin, VA) mean over chirps. Throws ConfigError with fewer than 2 chirps.
RangeProfiles clutter_removal(RangeProfiles profiles);
/// Time-domain equivalent on a cube (the range FFT is linear, so either order gives the same profiles).
DataCube clutter_removal(DataCube cube);

struct RangeDopplerMap {
  /// Power summed noncoherently over VAs, [doppler bin][range bin]. Doppler bin Nc/2 is zero velocity.
  Matrix<double> values;
  /// Per-VA complex spectrum behind `values`, [doppler bin][range bin][VA].
  Cube<cdouble> spectra;

  std::size_t doppler_bins() const noexcept { return values.rows(); }
  std::size_t range_bins() const noexcept { return values.cols(); }
  std::size_t zero_doppler_bin() const noexcept { return values.rows() / 2; }
};

/// Unwindowed FFT along the chirp axis, fftshifted so bin Nc/2 is zero velocity.
RangeDopplerMap doppler_fft(const RangeProfiles& profiles);

struct CfarParams {
  std::size_t guard_doppler = 2;
  std::size_t guard_range = 2;
  std::size_t train_doppler = 4;
  std::size_t train_range = 8;
  double pfa = 1e-3;

  void validate() const;
};

struct CfarCell {
  std::size_t row = 0;
  std::size_t col = 0;
  double snr_db = 0.0;  // cell value over the training mean
};

/// Cell-averaging CFAR over any non-negative power map. Windows are clamped at the edges and
/// alpha = N (pfa^(-1/N) - 1) uses the clamped training count N. Sorted by SNR descending,
/// ties by (row, col).
std::vector<CfarCell> cfar_cells(const Matrix<double>& power, const CfarParams& params = {});

struct Detection {
  std::size_t range_bin = 0;
  std::size_t doppler_bin = 0;
  double range = 0.0;            // m
  double radial_velocity = 0.0;  // m/s
  double snr_db = 0.0;
};

std::vector<Detection> cfar_2d(const RangeDopplerMap& map, const RadarConfig& cfg, const CfarParams& params = {});

/// Range of an FFT bin: freq_to_range(bin * fs / nfft).
double range_bin_to_m(std::size_t bin, std::size_t nfft, const RadarConfig& cfg);
/// Signed spatial frequency (rad) of angle-FFT bin k: 2 pi (k - nfft/2) / nfft, for a centred spectrum.
double angle_bin_to_omega(std::size_t k, std::size_t nfft);

struct AngleEstimate {
  double azimuth = 0.0;    // rad
  double elevation = 0.0;  // rad
};

/// Azimuth from the zero-padded FFT of the 8-VA aperture; elevation from the summed phase
/// difference of the vertical pairs. Throws DomainError for an all-zero snapshot.
AngleEstimate aoa_fft(std::span<const cdouble> snapshot, const VirtualArrayLayout& layout, const RadarConfig& cfg,
                      std::size_t nfft = kDefaultAngleFft);

/// Centred angle spectrum: out[k] = sum_n x[n] exp(-j omega_k n) with omega_k = angle_bin_to_omega(k).
void angle_spectrum(std::span<const cdouble> x, std::span<cdouble> out);

}  // namespace dronerad
