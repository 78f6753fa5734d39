#include "dronerad/music.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dronerad/dsp.hpp"
#include "dronerad/errors.hpp"
#include "dronerad/fft.hpp"
#include "dronerad/peak.hpp"

namespace dronerad {
namespace {

using EMat = Eigen::MatrixXcd;
using RowMajorMap = Eigen::Map<const Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

constexpr double kDenominatorFloor = 1e-15;

void check_increasing(const std::vector<double>& v, const char* what) {
  if (v.empty()) {
    throw ConfigError(std::string("sweep grid has no ") + what);
  }
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) {
      throw ConfigError(std::string("sweep grid ") + what + " must be strictly increasing");
    }
  }
}

// Range bins [first, first + count) spanning the swept ranges plus a margin.
struct BeamspaceBins {
  std::size_t first = 0;
  std::size_t count = 0;
};

BeamspaceBins beamspace_bins(const SweepGrid& grid, const RadarConfig& cfg, const MusicParams& p) {
  auto to_bin = [&](double r) {
    return range_to_beat_freq(r, cfg) * static_cast<double>(p.range_fft) / cfg.adc_sample_rate;
  };
  const double lo = std::floor(to_bin(grid.ranges.front())) - static_cast<double>(p.range_margin_bins);
  const double hi = std::ceil(to_bin(grid.ranges.back())) + static_cast<double>(p.range_margin_bins);
  const double limit = static_cast<double>(p.range_fft / 2 - 1);
  if (to_bin(grid.ranges.back()) > limit) {
    throw ConfigError("sweep ranges exceed the unambiguous range");
  }
  const auto first = static_cast<std::size_t>(std::max(0.0, lo));
  const auto last = static_cast<std::size_t>(std::min(limit, hi));
  return {first, last - first + 1};
}

// Beamspace image of the fast-time tone for each swept range: [range index][bin].
Matrix<cdouble> range_steering(const SweepGrid& grid, const RadarConfig& cfg, const MusicParams& p,
                               const BeamspaceBins& bins) {
  const std::size_t ns = cfg.samples_per_chirp;
  const auto window = hann_window(ns);
  Matrix<cdouble> out(grid.ranges.size(), bins.count);
  std::vector<cdouble> in(p.range_fft), spec(p.range_fft);
  for (std::size_t i = 0; i < grid.ranges.size(); ++i) {
    const double step = 2.0 * std::numbers::pi * range_to_beat_freq(grid.ranges[i], cfg) / cfg.adc_sample_rate;
    std::fill(in.begin(), in.end(), cdouble{});
    for (std::size_t n = 0; n < ns; ++n) {
      in[n] = std::polar(window[n], step * static_cast<double>(n));
    }
    fft_forward(in, spec);
    for (std::size_t b = 0; b < bins.count; ++b) {
      out(i, b) = spec[bins.first + b];
    }
  }
  return out;
}

// Snapshot matrix: rows are (bin, VA) pairs (index b * vas.size() + i), columns are chirps.
EMat beamspace_snapshots(const RangeProfiles& profiles, const BeamspaceBins& bins, std::span<const std::size_t> vas) {
  const std::size_t m = vas.size();
  EMat y(static_cast<Eigen::Index>(bins.count * m), static_cast<Eigen::Index>(profiles.dim0()));
  for (std::size_t c = 0; c < profiles.dim0(); ++c) {
    for (std::size_t b = 0; b < bins.count; ++b) {
      for (std::size_t i = 0; i < m; ++i) {
        y(static_cast<Eigen::Index>(b * m + i), static_cast<Eigen::Index>(c)) = profiles(c, bins.first + b, vas[i]);
      }
    }
  }
  return y;
}

struct SignalSubspace {
  Matrix<cdouble> basis;  // [source][dimension], rows orthonormal
  bool regularized = false;
};

// Dominant eigenvectors of Y Y^H / K. With fewer snapshots than dimensions the K x K Gram matrix
// carries the same non-zero spectrum; its eigenvectors map back through Y.
// Y^H Y / K, Hermitian.
EMat gram_of(const EMat& y) {
  const Eigen::Index k = y.cols();
  EMat gram = EMat::Zero(k, k);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(y.adjoint(), 1.0 / static_cast<double>(k));
  gram.triangularView<Eigen::StrictlyUpper>() = gram.adjoint();
  return gram;
}

// `gram`, when given, must equal gram_of(y); the Gram matrix ignores row order, so callers can
// assemble it from row blocks shared between apertures.
SignalSubspace signal_subspace(const EMat& y, std::size_t n_sources, const EMat* gram_in = nullptr) {
  const auto n = static_cast<std::size_t>(y.rows());
  const auto k = static_cast<std::size_t>(y.cols());
  if (n_sources == 0 || n_sources >= n) {
    throw ConfigError("n_sources must lie in [1, snapshot dimension)");
  }
  if (k == 0) {
    throw ConfigError("no snapshots");
  }
  const double kd = static_cast<double>(k);
  SignalSubspace out;
  out.basis = Matrix<cdouble>(n_sources, n);
  // Diagonal loading with 1e-6 trace shifts every eigenvalue equally, so the eigenvectors and the
  // projector below are unchanged; it is reported so callers know the covariance was singular.
  out.regularized = k < n;
  if (k < n) {
    const EMat gram = gram_in != nullptr ? *gram_in : gram_of(y);
    const double trace = gram.trace().real();
    if (!(trace > 0.0)) {
      throw NoTargetError("no moving returns in the swept range");
    }
    if (n_sources > k) {
      throw ConfigError("n_sources exceeds the snapshot count");
    }
    // Dense Hermitian solve: Householder tridiagonalization, implicit QR on the real tridiagonal,
    // then back-transformation of only the dominant eigenvectors.
    const Eigen::Tridiagonalization<EMat> tri(gram);
    const Eigen::VectorXd diag = tri.diagonal();
    const Eigen::VectorXd sub = tri.subDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) {
      throw Error("eigendecomposition failed");
    }
    for (std::size_t s = 0; s < n_sources; ++s) {
      const Eigen::Index col = static_cast<Eigen::Index>(k - 1 - s);
      const double lambda = es.eigenvalues()(col);
      if (!(lambda > 1e-13 * trace)) {
        throw NoTargetError("signal subspace rank below n_sources");
      }
      const Eigen::VectorXcd w = tri.matrixQ() * es.eigenvectors().col(col).cast<cdouble>();
      const Eigen::VectorXcd u = y * w / std::sqrt(kd * lambda);
      for (std::size_t j = 0; j < n; ++j) {
        out.basis(s, j) = u(static_cast<Eigen::Index>(j));
      }
    }
  } else {
    const EMat r = (y * y.adjoint()) / kd;
    Eigen::SelfAdjointEigenSolver<EMat> es(r);
    if (es.info() != Eigen::Success) {
      throw Error("eigendecomposition failed");
    }
    if (!(r.trace().real() > 0.0)) {
      throw NoTargetError("no moving returns in the swept range");
    }
    for (std::size_t s = 0; s < n_sources; ++s) {
      const Eigen::Index col = static_cast<Eigen::Index>(n - 1 - s);
      for (std::size_t j = 0; j < n; ++j) {
        out.basis(s, j) = es.eigenvectors()(static_cast<Eigen::Index>(j), col);
      }
    }
  }
  return out;
}

// 1 / (1 - sum_i |u_i^H a|^2 / |a|^2) in dB, evaluated directly on the full vector a.
double projected_db(std::span<const cdouble> a, const Matrix<cdouble>& signal) {
  double norm2 = 0.0;
  for (const auto& v : a) {
    norm2 += std::norm(v);
  }
  if (!(norm2 > 0.0)) {
    throw DomainError("zero steering vector");
  }
  double captured = 0.0;
  for (std::size_t s = 0; s < signal.rows(); ++s) {
    const auto u = signal.row(s);
    cdouble dot{};
    for (std::size_t j = 0; j < a.size(); ++j) {
      dot += std::conj(u[j]) * a[j];
    }
    captured += std::norm(dot);
  }
  const double den = std::max(1.0 - captured / norm2, kDenominatorFloor);
  return -10.0 * std::log10(den);
}

std::vector<cdouble> angle_steering(std::span<const std::size_t> vas, double ux, double uz, const RadarConfig& cfg,
                                    const VirtualArrayLayout& layout) {
  std::vector<cdouble> s(vas.size());
  for (std::size_t i = 0; i < vas.size(); ++i) {
    s[i] = std::polar(1.0, layout.phase(vas[i], ux, uz, cfg));
  }
  return s;
}

// Evaluates the pseudospectrum over (range x angle-pairs) cells: cell (ir, ia) uses the range
// steering row ir and the angle steering vector ia, forming the Kronecker product per cell.
void evaluate_grid(const Matrix<cdouble>& range_vecs, const std::vector<std::vector<cdouble>>& angle_vecs,
                   const Matrix<cdouble>& signal, std::size_t workers, std::span<double> out) {
  const std::size_t nr = range_vecs.rows();
  const std::size_t na = angle_vecs.size();
  const std::size_t nb = range_vecs.cols();
  const std::size_t m = angle_vecs.empty() ? 0 : angle_vecs.front().size();
  parallel_for(nr, workers, [&](std::size_t ir) {
    std::vector<cdouble> a(nb * m);
    const auto t = range_vecs.row(ir);
    for (std::size_t ia = 0; ia < na; ++ia) {
      const auto& s = angle_vecs[ia];
      for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t i = 0; i < m; ++i) {
          a[b * m + i] = t[b] * s[i];
        }
      }
      out[ir * na + ia] = projected_db(a, signal);
    }
  });
}

std::vector<std::size_t> all_vas() {
  std::vector<std::size_t> v(kVirtualAntennas);
  for (std::size_t i = 0; i < kVirtualAntennas; ++i) {
    v[i] = i;
  }
  return v;
}

struct Prepared {
  BeamspaceBins bins;
  RangeProfiles profiles;
  Matrix<cdouble> range_vecs;
};

Prepared prepare(const DataCube& cube, const RadarConfig& cfg, const SweepGrid& grid, const MusicParams& params) {
  grid.validate();
  if (!cube.matches(cfg)) {
    throw ConfigError("cube shape does not match the radar config");
  }
  Prepared p;
  p.bins = beamspace_bins(grid, cfg, params);
  p.profiles = clutter_removal(range_fft(cube, params.range_fft));
  p.range_vecs = range_steering(grid, cfg, params, p.bins);
  return p;
}

double internal_azimuth(double report_deg) { return deg_to_rad(report_deg - 90.0); }

MusicEstimate make_estimate(const SweepGrid& grid, std::size_t ir, std::size_t ia, std::size_t ie, double timestamp) {
  MusicEstimate e;
  e.grid_point = {grid.ranges[ir], internal_azimuth(grid.azimuths[ia]), deg_to_rad(grid.elevations[ie])};
  const Vec3 p = spherical_to_cartesian({e.grid_point.range, e.grid_point.azimuth, e.grid_point.elevation});
  e.position = {p.x, p.y, p.z, timestamp};
  return e;
}

}  // namespace

std::vector<double> SweepGrid::linspace_step(double first, double last, double step) {
  if (!(step > 0.0) || last < first) {
    throw ConfigError("invalid sweep range");
  }
  const auto n = static_cast<std::size_t>(std::llround((last - first) / step)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = first + static_cast<double>(i) * step;
  }
  return v;
}

SweepGrid SweepGrid::standard() {
  return {linspace_step(1.0, 4.0, 0.1), linspace_step(30.0, 150.0, 1.0), linspace_step(-15.0, 15.0, 1.0)};
}

void SweepGrid::validate() const {
  check_increasing(ranges, "ranges");
  check_increasing(azimuths, "azimuths");
  check_increasing(elevations, "elevations");
  if (!(ranges.front() > 0.0)) {
    throw ConfigError("sweep ranges must be positive");
  }
  if (azimuths.front() < 0.0 || azimuths.back() > 180.0) {
    throw ConfigError("sweep azimuths must lie in [0, 180] deg");
  }
  if (elevations.front() < -90.0 || elevations.back() > 90.0) {
    throw ConfigError("sweep elevations must lie in [-90, 90] deg");
  }
  const double max_ux = std::max(std::abs(std::sin(internal_azimuth(azimuths.front()))),
                                 std::abs(std::sin(internal_azimuth(azimuths.back()))));
  const double max_uz =
      std::max(std::abs(std::sin(deg_to_rad(elevations.front()))), std::abs(std::sin(deg_to_rad(elevations.back()))));
  if (max_ux * max_ux + max_uz * max_uz > 1.0) {
    throw ConfigError("sweep grid leaves the visible region");
  }
}

CovarianceMatrix covariance(std::span<const std::vector<cdouble>> snapshots) {
  if (snapshots.empty()) {
    throw ConfigError("covariance needs at least one snapshot");
  }
  const std::size_t n = snapshots.front().size();
  for (const auto& s : snapshots) {
    if (s.size() != n) {
      throw ConfigError("snapshots have different lengths");
    }
  }
  CovarianceMatrix cov{Matrix<cdouble>(n, n), snapshots.size()};
  const double inv = 1.0 / static_cast<double>(snapshots.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      cdouble acc{};
      for (const auto& s : snapshots) {
        acc += s[i] * std::conj(s[j]);
      }
      acc *= inv;
      if (i == j) {
        acc = {acc.real(), 0.0};
      }
      cov.values(i, j) = acc;
      cov.values(j, i) = std::conj(acc);
    }
  }
  return cov;
}

Matrix<cdouble> noise_subspace(const CovarianceMatrix& cov, std::size_t n_sources) {
  const std::size_t n = cov.values.rows();
  if (cov.values.cols() != n || n == 0) {
    throw ConfigError("covariance must be square and non-empty");
  }
  if (n_sources == 0 || n_sources >= n) {
    throw ConfigError("n_sources must lie in [1, n)");
  }
  const EMat r = RowMajorMap(cov.values.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::SelfAdjointEigenSolver<EMat> es(r);
  if (es.info() != Eigen::Success) {
    throw Error("eigendecomposition failed");
  }
  const std::size_t noise = n - n_sources;
  Matrix<cdouble> e(n, noise);
  for (std::size_t j = 0; j < noise; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      e(i, j) = es.eigenvectors()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return e;
}

std::vector<cdouble> steering_vector(const GridPoint& point, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                                     SteeringMode mode) {
  const double ux = std::sin(point.azimuth);
  const double uz = std::sin(point.elevation);
  if (!(ux * ux + uz * uz <= 1.0) || std::abs(point.azimuth) > std::numbers::pi / 2 ||
      std::abs(point.elevation) > std::numbers::pi / 2) {
    throw DomainError("grid point outside the visible region");
  }
  const auto vas = all_vas();
  auto s = angle_steering(vas, ux, uz, cfg, layout);
  if (mode == SteeringMode::angle_only) {
    return s;
  }
  if (!(point.range >= 0.0)) {
    throw DomainError("range must be non-negative");
  }
  const std::size_t ns = cfg.samples_per_chirp;
  const double step = 2.0 * std::numbers::pi * range_to_beat_freq(point.range, cfg) / cfg.adc_sample_rate;
  std::vector<cdouble> a(ns * kVirtualAntennas);
  for (std::size_t n = 0; n < ns; ++n) {
    const cdouble t = std::polar(1.0, step * static_cast<double>(n));
    for (std::size_t v = 0; v < kVirtualAntennas; ++v) {
      a[n * kVirtualAntennas + v] = t * s[v];
    }
  }
  return a;
}

double music_pseudospectrum_db(std::span<const cdouble> a, const Matrix<cdouble>& noise_basis) {
  if (noise_basis.rows() != a.size()) {
    throw ConfigError("steering vector and noise basis sizes differ");
  }
  double norm2 = 0.0;
  for (const auto& v : a) {
    norm2 += std::norm(v);
  }
  if (!(norm2 > 0.0)) {
    throw DomainError("zero steering vector");
  }
  double den = 0.0;
  for (std::size_t j = 0; j < noise_basis.cols(); ++j) {
    cdouble dot{};
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += std::conj(noise_basis(i, j)) * a[i];
    }
    den += std::norm(dot);
  }
  return -10.0 * std::log10(std::max(den / norm2, kDenominatorFloor));
}

Music2dSpectra music_2d_spectra(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                                const SweepGrid& grid, const MusicParams& params) {
  const auto prep = prepare(cube, cfg, grid, params);
  const auto az_aperture = layout.azimuth_aperture();
  std::vector<std::size_t> el_vas;
  for (const auto& [lo, hi] : layout.elevation_pairs) {
    el_vas.push_back(lo);
  }
  for (const auto& [lo, hi] : layout.elevation_pairs) {
    el_vas.push_back(hi);
  }
  const std::size_t nr = grid.ranges.size();
  Music2dSpectra out;
  out.range_azimuth = Matrix<double>(nr, grid.azimuths.size());
  out.range_elevation = Matrix<double>(nr, grid.elevations.size());

  // Rows shared by both apertures enter both Gram matrices; compute them once.
  std::vector<std::size_t> shared, az_only, el_only;
  for (std::size_t v : az_aperture) {
    (std::find(el_vas.begin(), el_vas.end(), v) != el_vas.end() ? shared : az_only).push_back(v);
  }
  for (std::size_t v : el_vas) {
    if (std::find(shared.begin(), shared.end(), v) == shared.end()) {
      el_only.push_back(v);
    }
  }
  const EMat g_shared = gram_of(beamspace_snapshots(prep.profiles, prep.bins, shared));
  const EMat g_az = g_shared + gram_of(beamspace_snapshots(prep.profiles, prep.bins, az_only));
  const EMat g_el = g_shared + gram_of(beamspace_snapshots(prep.profiles, prep.bins, el_only));

  const auto az_sub =
      signal_subspace(beamspace_snapshots(prep.profiles, prep.bins, az_aperture), params.n_sources, &g_az);
  std::vector<std::vector<cdouble>> az_vecs;
  for (double az : grid.azimuths) {
    az_vecs.push_back(angle_steering(az_aperture, std::sin(internal_azimuth(az)), 0.0, cfg, layout));
  }
  evaluate_grid(prep.range_vecs, az_vecs, az_sub.basis, params.workers, out.range_azimuth.data());

  // The pairs share their x positions, so the elevation steering can assume boresight azimuth.
  const auto el_sub =
      signal_subspace(beamspace_snapshots(prep.profiles, prep.bins, el_vas), params.n_sources, &g_el);
  std::vector<std::vector<cdouble>> el_vecs;
  for (double el : grid.elevations) {
    el_vecs.push_back(angle_steering(el_vas, 0.0, std::sin(deg_to_rad(el)), cfg, layout));
  }
  evaluate_grid(prep.range_vecs, el_vecs, el_sub.basis, params.workers, out.range_elevation.data());
  out.regularized = az_sub.regularized || el_sub.regularized;
  return out;
}

Music3dSpectrum music_3d_spectrum(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                                  const SweepGrid& grid, const MusicParams& params) {
  const auto prep = prepare(cube, cfg, grid, params);
  const auto vas = all_vas();
  const auto sub = signal_subspace(beamspace_snapshots(prep.profiles, prep.bins, vas), params.n_sources);
  std::vector<std::vector<cdouble>> angle_vecs;
  angle_vecs.reserve(grid.azimuths.size() * grid.elevations.size());
  for (double az : grid.azimuths) {
    for (double el : grid.elevations) {
      angle_vecs.push_back(angle_steering(vas, std::sin(internal_azimuth(az)), std::sin(deg_to_rad(el)), cfg, layout));
    }
  }
  Music3dSpectrum out;
  out.values = Cube<double>(grid.ranges.size(), grid.azimuths.size(), grid.elevations.size());
  evaluate_grid(prep.range_vecs, angle_vecs, sub.basis, params.workers, out.values.data());
  out.regularized = sub.regularized;
  return out;
}

MusicEstimate locate_music_2d(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                              const SweepGrid& grid, const MusicParams& params) {
  const auto spectra = music_2d_spectra(cube, cfg, layout, grid, params);
  const auto ra = find_peak(spectra.range_azimuth.data(), {spectra.range_azimuth.rows(), spectra.range_azimuth.cols(), 1},
                            PeakScale::decibel, params.tie_db);
  const auto re = find_peak(spectra.range_elevation.data(),
                            {spectra.range_elevation.rows(), spectra.range_elevation.cols(), 1}, PeakScale::decibel,
                            params.tie_db);
  auto e = make_estimate(grid, ra[0], ra[1], re[1], cube.timestamp);
  e.regularized = spectra.regularized;
  e.peak_db = spectra.range_azimuth(ra[0], ra[1]);
  return e;
}

MusicEstimate locate_music_3d(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                              const SweepGrid& grid, const MusicParams& params) {
  const auto spec = music_3d_spectrum(cube, cfg, layout, grid, params);
  const auto p = find_peak(spec.values.data(), {spec.values.dim0(), spec.values.dim1(), spec.values.dim2()},
                           PeakScale::decibel, params.tie_db);
  auto e = make_estimate(grid, p[0], p[1], p[2], cube.timestamp);
  e.regularized = spec.regularized;
  e.peak_db = spec.values(p[0], p[1], p[2]);
  return e;
}

}  // namespace dronerad
