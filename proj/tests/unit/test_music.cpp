#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dronerad/errors.hpp"
#include "dronerad/music.hpp"
#include "dronerad/pipelines.hpp"
#include "dronerad/simulator.hpp"
#include "oracles.hpp"

using namespace dronerad;

namespace {

const RadarConfig kCfg;

MusicParams single_worker(std::size_t n_sources = 1) {
  MusicParams p;
  p.workers = 1;
  p.n_sources = n_sources;
  return p;
}

std::vector<cdouble> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  std::vector<cdouble> v(n);
  for (auto& x : v) {
    x = {g(rng), g(rng)};
  }
  return v;
}

// Columns mixed by a product of complex Givens rotations: an arbitrary unitary change of basis.
Matrix<cdouble> rotate_columns(Matrix<cdouble> e, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  for (int k = 0; k < 20; ++k) {
    const std::size_t i = rng() % e.cols();
    const std::size_t j = rng() % e.cols();
    if (i == j) {
      continue;
    }
    const double th = u(rng), ph = u(rng);
    const double c = std::cos(th), s = std::sin(th);
    for (std::size_t r = 0; r < e.rows(); ++r) {
      const cdouble a = e(r, i), b = e(r, j);
      e(r, i) = c * a + s * std::polar(1.0, ph) * b;
      e(r, j) = -s * std::polar(1.0, -ph) * a + c * b;
    }
  }
  return e;
}

}  // namespace

TEST(Covariance, RankOneAndHermitian) {
  std::mt19937_64 rng(1);
  const std::vector<std::vector<cdouble>> one{random_vector(6, rng)};
  const auto cov = covariance(one);
  EXPECT_EQ(cov.snapshot_count, 1U);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_LT(std::abs(cov.values(i, j) - one[0][i] * std::conj(one[0][j])), 1e-14);
      EXPECT_EQ(cov.values(i, j), std::conj(cov.values(j, i)));
    }
  }
  EXPECT_THROW(covariance(std::vector<std::vector<cdouble>>{}), ConfigError);
  EXPECT_THROW(covariance(std::vector<std::vector<cdouble>>{{1.0, 2.0}, {1.0}}), ConfigError);
}

TEST(Covariance, WhiteNoiseApproachesIdentity) {
  std::mt19937_64 rng(2);
  std::vector<std::vector<cdouble>> snaps;
  for (int k = 0; k < 10000; ++k) {
    snaps.push_back(random_vector(8, rng));
  }
  const auto cov = covariance(snaps);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(cov.values(i, i).real(), 1.0, 0.05);
    EXPECT_EQ(cov.values(i, i).imag(), 0.0);
  }
}

TEST(NoiseSubspace, OrthogonalToSourceAndOrthonormal) {
  const auto layout = VirtualArrayLayout::standard(kCfg);
  const auto a = steering_vector({2.0, 0.3, -0.1}, kCfg, layout, SteeringMode::angle_only);
  const auto cov = covariance(std::vector<std::vector<cdouble>>{a});
  const auto e = noise_subspace(cov, 1);
  ASSERT_EQ(e.rows(), 12U);
  ASSERT_EQ(e.cols(), 11U);
  for (std::size_t j = 0; j < e.cols(); ++j) {
    cdouble dot{};
    for (std::size_t i = 0; i < 12; ++i) {
      dot += std::conj(a[i]) * e(i, j);
    }
    EXPECT_LT(std::abs(dot), 1e-6 * std::sqrt(12.0));
  }
  auto check_orthonormal = [](const Matrix<cdouble>& m) {
    for (std::size_t p = 0; p < m.cols(); ++p) {
      for (std::size_t q = 0; q < m.cols(); ++q) {
        cdouble dot{};
        for (std::size_t i = 0; i < m.rows(); ++i) {
          dot += std::conj(m(i, p)) * m(i, q);
        }
        EXPECT_LT(std::abs(dot - (p == q ? 1.0 : 0.0)), 1e-9);
      }
    }
  };
  check_orthonormal(e);

  CovarianceMatrix eye{Matrix<cdouble>(5, 5), 1};
  for (std::size_t i = 0; i < 5; ++i) {
    eye.values(i, i) = 1.0;
  }
  check_orthonormal(noise_subspace(eye, 2));
  EXPECT_THROW(noise_subspace(eye, 5), ConfigError);
  EXPECT_THROW(noise_subspace(eye, 0), ConfigError);
}

TEST(Steering, AngleAndJointModes) {
  const auto layout = VirtualArrayLayout::standard(kCfg);
  const auto bore = steering_vector({2.0, 0.0, 0.0}, kCfg, layout, SteeringMode::angle_only);
  ASSERT_EQ(bore.size(), 12U);
  for (const auto& v : bore) {
    EXPECT_LT(std::abs(v - 1.0), 1e-15);
  }
  const GridPoint gp{2.35, deg_to_rad(20.0), deg_to_rad(-7.0)};
  const auto joint = steering_vector(gp, kCfg, layout, SteeringMode::joint_range);
  ASSERT_EQ(joint.size(), kCfg.samples_per_chirp * 12);
  double norm2 = 0.0;
  for (const auto& v : joint) {
    EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
    norm2 += std::norm(v);
  }
  EXPECT_NEAR(std::sqrt(norm2), std::sqrt(double(joint.size())), 1e-9);
  const double cycles = 2.0 * kCfg.chirp_slope * gp.range / (kSpeedOfLight * kCfg.adc_sample_rate);
  for (std::size_t n : {0U, 100U, 254U}) {
    const double step = std::arg(joint[(n + 1) * 12 + 5] / joint[n * 12 + 5]);
    EXPECT_NEAR(step, std::remainder(2.0 * std::numbers::pi * cycles, 2.0 * std::numbers::pi), 1e-9);
  }
  // Relative VA phases follow the array geometry.
  const auto ang = steering_vector(gp, kCfg, layout, SteeringMode::angle_only);
  EXPECT_NEAR(std::arg(ang[1] / ang[0]), std::numbers::pi * std::sin(gp.azimuth), 1e-12);
  EXPECT_NEAR(std::arg(ang[8] / ang[2]), std::numbers::pi * std::sin(gp.elevation), 1e-12);
  EXPECT_THROW(steering_vector({2.0, 1.2, 1.2}, kCfg, layout, SteeringMode::angle_only), DomainError);
}

TEST(Pseudospectrum, InvariantUnderUnitaryBasisChange) {
  std::mt19937_64 rng(4);
  const auto layout = VirtualArrayLayout::standard(kCfg);
  std::vector<std::vector<cdouble>> snaps;
  const auto s1 = steering_vector({2.0, 0.2, 0.0}, kCfg, layout, SteeringMode::angle_only);
  std::normal_distribution<double> g;
  for (int k = 0; k < 64; ++k) {
    auto n = random_vector(12, rng);
    const cdouble amp{g(rng), g(rng)};
    for (std::size_t i = 0; i < 12; ++i) {
      n[i] = amp * s1[i] + 0.1 * n[i];
    }
    snaps.push_back(n);
  }
  const auto e = noise_subspace(covariance(snaps), 1);
  const auto e2 = rotate_columns(e, rng);
  for (double az = -1.2; az < 1.2; az += 0.1) {
    const auto a = steering_vector({2.0, az, 0.05}, kCfg, layout, SteeringMode::angle_only);
    const double p1 = music_pseudospectrum_db(a, e);
    const double p2 = music_pseudospectrum_db(a, e2);
    EXPECT_NEAR(std::pow(10.0, p1 / 10.0), std::pow(10.0, p2 / 10.0), 1e-9 * std::pow(10.0, p1 / 10.0));
    EXPECT_TRUE(std::isfinite(p1));
  }
}

TEST(Regularization, DiagonalLoadingKeepsArgmax) {
  // Fewer snapshots than dimensions: loading by 1e-6 trace must not move the peak.
  const auto layout = VirtualArrayLayout::standard(kCfg);
  std::vector<std::vector<cdouble>> grid;
  for (int d = -60; d <= 60; ++d) {
    grid.push_back(steering_vector({2.0, deg_to_rad(d), 0.0}, kCfg, layout, SteeringMode::angle_only));
  }
  std::size_t changed = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    const auto src = steering_vector({2.0, deg_to_rad(u(rng)), 0.0}, kCfg, layout, SteeringMode::angle_only);
    std::vector<std::vector<cdouble>> snaps;
    for (int k = 0; k < 6; ++k) {
      auto n = random_vector(12, rng);
      const auto amp = random_vector(1, rng)[0];
      for (std::size_t i = 0; i < 12; ++i) {
        n[i] = amp * src[i] + 0.01 * n[i];
      }
      snaps.push_back(n);
    }
    auto cov = covariance(snaps);
    auto loaded = cov;
    double trace = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      trace += cov.values(i, i).real();
    }
    for (std::size_t i = 0; i < 12; ++i) {
      loaded.values(i, i) += 1e-6 * trace;
    }
    const auto e1 = noise_subspace(cov, 1);
    const auto e2 = noise_subspace(loaded, 1);
    auto argmax = [&](const Matrix<cdouble>& e) {
      std::size_t best = 0;
      double best_v = -INFINITY;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const double v = music_pseudospectrum_db(grid[k], e);
        if (v > best_v) {
          best_v = v;
          best = k;
        }
      }
      return best;
    };
    changed += argmax(e1) != argmax(e2) ? 1 : 0;
  }
  EXPECT_EQ(changed, 0U);
}

TEST(SweepGridTest, StandardAndValidation) {
  const auto g = SweepGrid::standard();
  EXPECT_EQ(g.ranges.size(), 31U);
  EXPECT_EQ(g.azimuths.size(), 121U);
  EXPECT_EQ(g.elevations.size(), 31U);
  EXPECT_NEAR(g.ranges[13], 2.3, 1e-12);
  EXPECT_NO_THROW(g.validate());
  auto bad = g;
  bad.ranges = {1.0, 1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = g;
  bad.azimuths = {};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = g;
  bad.elevations = {-95.0, 0.0};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Music2d, RangeEstimateAndZeroCube) {
  const auto layout = VirtualArrayLayout::standard(kCfg);
  const Vec3 p = oracle::direction_point(2.35, 12.0, 4.0);
  const std::vector<PointScatterer> pts{{p, p * (0.1 / 2.35), 1.0}};
  const auto est = locate_music_2d(synthesize_points(pts, kCfg, layout), kCfg, layout, SweepGrid::standard(), single_worker());
  EXPECT_LE(std::abs(est.grid_point.range - 2.35), 0.05 + 1e-9);
  EXPECT_NEAR(rad_to_deg(est.grid_point.azimuth), 12.0, 0.5 + 1e-9);
  EXPECT_NEAR(rad_to_deg(est.grid_point.elevation), 4.0, 0.5 + 1e-9);
  EXPECT_THROW(locate_music_2d(DataCube(kCfg), kCfg, layout, SweepGrid::standard(), single_worker()), NoTargetError);
  EXPECT_THROW(locate_music_3d(DataCube(kCfg), kCfg, layout, SweepGrid::standard(), single_worker()), NoTargetError);
}

TEST(Music2d, ResolvesTwoSourcesFiveDegreesApart) {
  const auto layout = VirtualArrayLayout::standard(kCfg);
  const Vec3 a = oracle::direction_point(2.5, 0.0, 0.0);
  const Vec3 b = oracle::direction_point(2.5, 5.0, 0.0);
  const std::vector<PointScatterer> pts{{a, a * (0.6 / 2.5), 1.0}, {b, b * (-0.45 / 2.5), 1.0}};
  PointFrameOptions opts;
  opts.noise_std = 1e-3;
  const auto cube = synthesize_points(pts, kCfg, layout, opts);
  const auto grid = SweepGrid::standard();
  const auto spec = music_2d_spectra(cube, kCfg, layout, grid, single_worker(2));
  const std::size_t row = 15;  // 2.5 m
  ASSERT_NEAR(grid.ranges[row], 2.5, 1e-12);
  // Local maxima along azimuth at the target range.
  std::vector<double> peaks;
  const auto& m = spec.range_azimuth;
  for (std::size_t k = 1; k + 1 < m.cols(); ++k) {
    if (m(row, k) > m(row, k - 1) && m(row, k) >= m(row, k + 1)) {
      peaks.push_back(grid.azimuths[k]);
    }
  }
  std::sort(peaks.begin(), peaks.end(), [&](double x, double y) {
    return m(row, static_cast<std::size_t>(x - 30.0)) > m(row, static_cast<std::size_t>(y - 30.0));
  });
  ASSERT_GE(peaks.size(), 2U);
  std::vector<double> top{peaks[0], peaks[1]};
  std::sort(top.begin(), top.end());
  EXPECT_NEAR(top[0], 90.0, 1.0);
  EXPECT_NEAR(top[1], 95.0, 1.0);

  // The 8-element Fourier beam cannot split them: one peak between the two.
  const auto fmaps = fft_2d_maps(cube, layout);
  const std::size_t rbin = static_cast<std::size_t>(std::lround(range_to_beat_freq(2.5, kCfg) * 256 / kCfg.adc_sample_rate));
  std::size_t fft_peaks = 0;
  for (std::size_t k = 80; k < 110; ++k) {
    if (fmaps.azimuth(rbin, k) > fmaps.azimuth(rbin, k - 1) && fmaps.azimuth(rbin, k) >= fmaps.azimuth(rbin, k + 1)) {
      ++fft_peaks;
    }
  }
  EXPECT_EQ(fft_peaks, 1U);
}

TEST(Music3d, CleanFramesAndAgreementWithBeamformer) {
  const auto r = oracle::closure(6, 77, true);
  EXPECT_EQ(r.music_hits, 6U);

  const auto layout = VirtualArrayLayout::standard(kCfg);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 3; ++i) {
    const auto t = oracle::closure_target(rng);
    const auto cube = synthesize_points(std::span(&t.scatterer, 1), kCfg, layout);
    const auto m = locate_music_3d(cube, kCfg, layout, SweepGrid::standard(), single_worker());
    const auto f = cartesian_to_spherical(locate_fft_3d(cube, kCfg, layout).position());
    EXPECT_LE(std::abs(m.grid_point.range - f.range), 0.1 + derived_params(kCfg).range_resolution);
    EXPECT_LE(std::abs(rad_to_deg(m.grid_point.azimuth - f.azimuth)), 1.0 + 0.7);
    EXPECT_LE(std::abs(rad_to_deg(m.grid_point.elevation - f.elevation)), 1.0 + 0.7);
  }
}

TEST(Music, GhostSceneSeparates2dFrom3d) {
  const auto layout = VirtualArrayLayout::standard(kCfg);
  const auto g = oracle::ghost_scene();
  const auto cube = synthesize_points(g.points, kCfg, layout);
  const auto e2 = locate_music_2d(cube, kCfg, layout, SweepGrid::standard(), single_worker());
  const auto e3 = locate_music_3d(cube, kCfg, layout, SweepGrid::standard(), single_worker());
  EXPECT_GT((e2.position.position() - g.truth).norm(), 0.3);
  EXPECT_LT((e3.position.position() - g.truth).norm(), 0.05);
}

TEST(Music, ParallelMatchesSingleWorkerAndFlagsRegularization) {
  const auto layout = VirtualArrayLayout::standard(kCfg);
  std::mt19937_64 rng(12);
  const auto t = oracle::closure_target(rng);
  const auto cube = synthesize_points(std::span(&t.scatterer, 1), kCfg, layout);
  MusicParams par = single_worker();
  par.workers = 4;
  const auto a = locate_music_3d(cube, kCfg, layout, SweepGrid::standard(), single_worker());
  const auto b = locate_music_3d(cube, kCfg, layout, SweepGrid::standard(), par);
  EXPECT_EQ(a.position.position(), b.position.position());
  EXPECT_EQ(a.peak_db, b.peak_db);
  // The default beamspace has more dimensions than the 128 chirp snapshots.
  EXPECT_TRUE(a.regularized);

  // A single swept range keeps the snapshot dimension below the snapshot count.
  SweepGrid narrow = SweepGrid::standard();
  narrow.ranges = {t.range};
  MusicParams tight = single_worker();
  tight.range_margin_bins = 1;
  const auto c = locate_music_2d(cube, kCfg, layout, narrow, tight);
  EXPECT_FALSE(c.regularized);
}
