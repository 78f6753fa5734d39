#include "dronerad/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "dronerad/errors.hpp"
#include "dronerad/fft.hpp"

namespace dronerad {

RangeProfiles range_fft(const DataCube& cube, std::size_t nfft) {
  std::vector<std::size_t> all(cube.chirps());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return range_fft(cube, all, nfft);
}

RangeProfiles range_fft(const DataCube& cube, std::span<const std::size_t> chirps, std::size_t nfft) {
  const std::size_t ns = cube.samples();
  const std::size_t nva = cube.antennas();
  if (nfft < ns) {
    throw ConfigError("range FFT size " + std::to_string(nfft) + " is smaller than the chirp length");
  }
  const auto window = hann_window(ns);
  RangeProfiles out(chirps.size(), nfft, nva);
  std::vector<cdouble> in(nfft), spec(nfft);
  for (std::size_t i = 0; i < chirps.size(); ++i) {
    const std::size_t c = chirps[i];
    if (c >= cube.chirps()) {
      throw ConfigError("chirp index out of range");
    }
    for (std::size_t v = 0; v < nva; ++v) {
      for (std::size_t n = 0; n < ns; ++n) {
        in[n] = cube.at(c, n, v) * window[n];
      }
      std::fill(in.begin() + static_cast<std::ptrdiff_t>(ns), in.end(), cdouble{});
      fft_forward(in, spec);
      for (std::size_t k = 0; k < nfft; ++k) {
        out(i, k, v) = spec[k];
      }
    }
  }
  return out;
}

namespace {

void subtract_chirp_mean(Cube<cdouble>& c) {
  if (c.dim0() < 2) {
    throw ConfigError("clutter removal needs at least 2 chirps");
  }
  const std::size_t plane = c.dim1() * c.dim2();
  std::vector<cdouble> mean(plane);
  for (std::size_t i = 0; i < c.dim0(); ++i) {
    const auto s = c.slab(i);
    for (std::size_t j = 0; j < plane; ++j) {
      mean[j] += s[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(c.dim0());
  for (auto& m : mean) {
    m *= inv;
  }
  for (std::size_t i = 0; i < c.dim0(); ++i) {
    auto s = c.slab(i);
    for (std::size_t j = 0; j < plane; ++j) {
      s[j] -= mean[j];
    }
  }
}

}  // namespace

RangeProfiles clutter_removal(RangeProfiles profiles) {
  subtract_chirp_mean(profiles);
  return profiles;
}

DataCube clutter_removal(DataCube cube) {
  subtract_chirp_mean(cube.values());
  return cube;
}

RangeDopplerMap doppler_fft(const RangeProfiles& profiles) {
  const std::size_t nc = profiles.dim0();
  const std::size_t nr = profiles.dim1();
  const std::size_t nva = profiles.dim2();
  RangeDopplerMap map;
  map.values = Matrix<double>(nc, nr);
  map.spectra = Cube<cdouble>(nc, nr, nva);
  std::vector<cdouble> in(nc), spec(nc);
  const std::size_t half = nc / 2;
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t v = 0; v < nva; ++v) {
      for (std::size_t c = 0; c < nc; ++c) {
        in[c] = profiles(c, r, v);
      }
      fft_forward(in, spec);
      for (std::size_t k = 0; k < nc; ++k) {
        const std::size_t d = (k + half) % nc;
        map.spectra(d, r, v) = spec[k];
        map.values(d, r) += std::norm(spec[k]);
      }
    }
  }
  return map;
}

void CfarParams::validate() const {
  if (!(pfa > 0.0 && pfa < 1.0)) {
    throw ConfigError("CFAR pfa must lie in (0, 1)");
  }
  if (train_doppler == 0 && train_range == 0) {
    throw ConfigError("CFAR needs training cells");
  }
}

std::vector<CfarCell> cfar_cells(const Matrix<double>& power, const CfarParams& params) {
  params.validate();
  const std::size_t rows = power.rows();
  const std::size_t cols = power.cols();
  std::vector<CfarCell> out;
  if (rows == 0 || cols == 0) {
    return out;
  }
  // Summed-area table with a zero border: sat(i, j) = sum of power[0..i)[0..j).
  Matrix<double> sat(rows + 1, cols + 1);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (!(power(i, j) >= 0.0)) {
        throw DomainError("CFAR input must be non-negative");
      }
      acc += power(i, j);
      sat(i + 1, j + 1) = sat(i, j + 1) + acc;
    }
  }
  auto box = [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    // Inclusive [r0, r1] x [c0, c1].
    return sat(r1 + 1, c1 + 1) - sat(r0, c1 + 1) - sat(r1 + 1, c0) + sat(r0, c0);
  };
  const std::size_t outer_d = params.guard_doppler + params.train_doppler;
  const std::size_t outer_r = params.guard_range + params.train_range;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t or0 = i >= outer_d ? i - outer_d : 0;
    const std::size_t or1 = std::min(rows - 1, i + outer_d);
    const std::size_t gr0 = i >= params.guard_doppler ? i - params.guard_doppler : 0;
    const std::size_t gr1 = std::min(rows - 1, i + params.guard_doppler);
    for (std::size_t j = 0; j < cols; ++j) {
      const double cut = power(i, j);
      if (cut <= 0.0) {
        continue;
      }
      const std::size_t oc0 = j >= outer_r ? j - outer_r : 0;
      const std::size_t oc1 = std::min(cols - 1, j + outer_r);
      const std::size_t gc0 = j >= params.guard_range ? j - params.guard_range : 0;
      const std::size_t gc1 = std::min(cols - 1, j + params.guard_range);
      const std::size_t n = (or1 - or0 + 1) * (oc1 - oc0 + 1) - (gr1 - gr0 + 1) * (gc1 - gc0 + 1);
      if (n == 0) {
        continue;
      }
      const double sum = box(or0, or1, oc0, oc1) - box(gr0, gr1, gc0, gc1);
      const double nd = static_cast<double>(n);
      const double mean = std::max(sum, 0.0) / nd;
      const double alpha = nd * (std::pow(params.pfa, -1.0 / nd) - 1.0);
      if (cut > alpha * mean) {
        out.push_back({i, j, mean > 0.0 ? 10.0 * std::log10(cut / mean) : std::numeric_limits<double>::infinity()});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const CfarCell& a, const CfarCell& b) { return a.snr_db > b.snr_db; });
  return out;
}

double range_bin_to_m(std::size_t bin, std::size_t nfft, const RadarConfig& cfg) {
  return freq_to_range(static_cast<double>(bin) * cfg.adc_sample_rate / static_cast<double>(nfft), cfg);
}

std::vector<Detection> cfar_2d(const RangeDopplerMap& map, const RadarConfig& cfg, const CfarParams& params) {
  const auto cells = cfar_cells(map.values, params);
  const double vres = derived_params(cfg).velocity_resolution;
  const auto zero = static_cast<double>(map.zero_doppler_bin());
  std::vector<Detection> out;
  out.reserve(cells.size());
  for (const auto& c : cells) {
    out.push_back({c.col, c.row, range_bin_to_m(c.col, map.range_bins(), cfg),
                   (static_cast<double>(c.row) - zero) * vres, c.snr_db});
  }
  return out;
}

double angle_bin_to_omega(std::size_t k, std::size_t nfft) {
  return 2.0 * std::numbers::pi * (static_cast<double>(k) - static_cast<double>(nfft / 2)) / static_cast<double>(nfft);
}

void angle_spectrum(std::span<const cdouble> x, std::span<cdouble> out) {
  const std::size_t nfft = out.size();
  if (x.size() > nfft) {
    throw ConfigError("angle FFT shorter than the aperture");
  }
  std::vector<cdouble> in(nfft), spec(nfft);
  std::copy(x.begin(), x.end(), in.begin());
  fft_forward(in, spec);
  const std::size_t half = nfft / 2;
  for (std::size_t k = 0; k < nfft; ++k) {
    out[k] = spec[(k + nfft - half) % nfft];
  }
}

AngleEstimate aoa_fft(std::span<const cdouble> snapshot, const VirtualArrayLayout& layout, const RadarConfig& cfg,
                      std::size_t nfft) {
  if (snapshot.size() != kVirtualAntennas) {
    throw ConfigError("angle snapshot must hold 12 VA values");
  }
  if (std::all_of(snapshot.begin(), snapshot.end(), [](const cdouble& c) { return c == cdouble{}; })) {
    throw DomainError("angle undefined for an all-zero snapshot");
  }
  const auto aperture = layout.azimuth_aperture();
  std::array<cdouble, 8> x;
  for (std::size_t i = 0; i < aperture.size(); ++i) {
    x[i] = snapshot[aperture[i]];
  }
  std::vector<cdouble> spec(nfft);
  angle_spectrum(x, spec);
  std::size_t best = 0;
  for (std::size_t k = 1; k < nfft; ++k) {
    if (std::norm(spec[k]) > std::norm(spec[best])) {
      best = k;
    }
  }
  cdouble pair_sum{};
  for (const auto& [lo, hi] : layout.elevation_pairs) {
    pair_sum += std::conj(snapshot[lo]) * snapshot[hi];
  }
  AngleEstimate est;
  est.azimuth = phase_to_angle(angle_bin_to_omega(best, nfft), layout.spacing, cfg);
  // A phase of exactly +-pi only arises from degenerate pairs; clamp into the visible region.
  const double max_phase = 2.0 * std::numbers::pi * layout.spacing / cfg.wavelength();
  const double phase = std::clamp(std::arg(pair_sum), -max_phase, max_phase);
  est.elevation = pair_sum == cdouble{} ? 0.0 : phase_to_angle(phase, layout.spacing, cfg);
  return est;
}

}  // namespace dronerad
