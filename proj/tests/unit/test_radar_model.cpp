#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dronerad/errors.hpp"
#include "dronerad/radar_model.hpp"
#include "test_util.hpp"

using namespace dronerad;

namespace {

constexpr long double kPi = 3.141592653589793238462643383279502884L;
constexpr long double kC = 299792458.0L;

double rel_err(double got, long double want) {
  return want == 0.0L ? std::abs(got) : static_cast<double>(std::fabs((got - want) / want));
}

}  // namespace

// Closed forms evaluated independently in extended precision.
TEST(RadarEquations, FreqToRangeMatchesScalarOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> f(0.0, 5e6), s(1e12, 100e12);
  for (int i = 0; i < 1000; ++i) {
    RadarConfig cfg;
    cfg.chirp_slope = s(rng);
    const double fb = f(rng);
    const long double want = static_cast<long double>(fb) * kC / (2.0L * cfg.chirp_slope);
    EXPECT_LE(rel_err(freq_to_range(fb, cfg), want), 1e-12);
  }
}

TEST(RadarEquations, PhaseToVelocityMatchesScalarOracle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> phi(-3.14159, 3.14159), tc(20e-6, 200e-6), fc(20e9, 80e9);
  for (int i = 0; i < 1000; ++i) {
    RadarConfig cfg;
    cfg.chirp_period = tc(rng);
    cfg.carrier_freq = fc(rng);
    const double p = phi(rng);
    const long double lambda = kC / static_cast<long double>(cfg.carrier_freq);
    const long double want = lambda * p / (4.0L * kPi * cfg.chirp_period);
    EXPECT_LE(rel_err(phase_to_velocity(p, cfg), want), 1e-12);
  }
}

TEST(RadarEquations, PhaseToAngleMatchesScalarOracle) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> omega(-3.1, 3.1);
  RadarConfig cfg;
  const double d = cfg.wavelength() / 2.0;
  for (int i = 0; i < 1000; ++i) {
    const double w = omega(rng);
    const long double lambda = kC / static_cast<long double>(cfg.carrier_freq);
    const long double want = std::asin(lambda * w / (2.0L * kPi * static_cast<long double>(d)));
    EXPECT_LE(rel_err(phase_to_angle(w, d, cfg), want), 1e-12);
  }
}

TEST(RadarEquations, WorkedExamples) {
  RadarConfig cfg;
  // 1 MHz beat at 60 MHz/us: 1e6 * c / 1.2e14 = 2.498 m.
  EXPECT_NEAR(freq_to_range(1e6, cfg), 2.49827048333, 1e-9);
  EXPECT_EQ(freq_to_range(0.0, cfg), 0.0);
  EXPECT_THROW(freq_to_range(-1.0, cfg), DomainError);
  EXPECT_NEAR(range_to_beat_freq(freq_to_range(1.234e6, cfg), cfg), 1.234e6, 1e-6);

  EXPECT_EQ(phase_to_velocity(0.0, cfg), 0.0);
  EXPECT_NEAR(phase_to_velocity(std::numbers::pi, cfg), cfg.wavelength() / (4.0 * cfg.chirp_period), 1e-12);
  EXPECT_THROW(phase_to_velocity(3.2, cfg), DomainError);
  EXPECT_NEAR(velocity_to_phase(phase_to_velocity(1.0, cfg), cfg), 1.0, 1e-12);

  const double d = cfg.wavelength() / 2.0;
  EXPECT_EQ(phase_to_angle(0.0, d, cfg), 0.0);
  EXPECT_NEAR(phase_to_angle(std::numbers::pi / 2.0, d, cfg), std::numbers::pi / 6.0, 1e-12);
  EXPECT_NEAR(phase_to_angle(std::numbers::pi, d, cfg), std::numbers::pi / 2.0, 1e-6);
  EXPECT_THROW(phase_to_angle(3.5, d, cfg), DomainError);
  EXPECT_THROW(phase_to_angle(1.0, 0.0, cfg), DomainError);
}

TEST(RadarConfig, DerivedParameters) {
  RadarConfig cfg;
  const auto d = derived_params(cfg);
  const double bandwidth = 60e12 * 256 / 5e6;
  EXPECT_NEAR(d.range_resolution, kSpeedOfLight / (2.0 * bandwidth), 1e-15);
  EXPECT_NEAR(d.range_resolution, 0.0488, 1e-4);
  EXPECT_NEAR(d.max_range, 2.5e6 * kSpeedOfLight / 1.2e14, 1e-12);
  EXPECT_NEAR(d.velocity_resolution, cfg.wavelength() / (2.0 * 128 * 60e-6), 1e-15);
  EXPECT_NEAR(d.velocity_resolution, 0.3253, 1e-3);
  EXPECT_NEAR(d.max_unambiguous_velocity, cfg.wavelength() / (4.0 * 60e-6), 1e-15);
}

TEST(RadarConfig, ValidationRejectsInconsistentTiming) {
  RadarConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.chirp_period = 40e-6;  // 256 samples at 5 MHz take 51.2 us
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.frame_period = 0.005;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.carrier_freq = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.adc_sample_rate = std::nan("");
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.samples_per_chirp = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(RadarConfig, TextRoundTripAndDigest) {
  RadarConfig cfg;
  cfg.carrier_freq = 77e9 + 0.1;
  cfg.chirps_per_frame = 64;
  const auto text = config_to_string(cfg);
  EXPECT_EQ(config_from_string(text), cfg);
  EXPECT_EQ(config_digest(config_from_string(text)), config_digest(cfg));
  EXPECT_NE(config_digest(cfg), config_digest(RadarConfig{}));

  test::TempDir dir("cfg");
  write_config(cfg, dir.path() / "config.txt");
  EXPECT_EQ(read_config(dir.path() / "config.txt"), cfg);
}

TEST(RadarConfig, ParserErrors) {
  EXPECT_THROW(config_from_string("bogus_key = 1\n"), ConfigError);
  EXPECT_THROW(config_from_string("carrier_freq = abc\n"), ConfigError);
  EXPECT_THROW(config_from_string("no equals sign\n"), ParseError);
  EXPECT_THROW(config_from_string("carrier_freq = 1e9\ncarrier_freq = 2e9\n"), ParseError);
  const auto cfg = config_from_string("# comment\n\nchirps_per_frame = 32\n");
  EXPECT_EQ(cfg.chirps_per_frame, 32U);
  EXPECT_EQ(cfg.carrier_freq, RadarConfig{}.carrier_freq);

  auto values = parse_key_values("chirps_per_frame = 8\nseed = 3\n");
  const auto partial = config_from_values(values);
  EXPECT_EQ(partial.chirps_per_frame, 8U);
  ASSERT_EQ(values.size(), 1U);
  EXPECT_EQ(values.at("seed"), "3");
}

TEST(Geometry, SphericalRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0), r(0.5, 6.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{u(rng) * 2.0, std::abs(u(rng)) * 3.0 + 0.1, u(rng)};
    const auto s = cartesian_to_spherical(p);
    const auto back = spherical_to_cartesian(s);
    EXPECT_LE((back - p).norm(), 1e-9 * p.norm());
  }
  const auto s = cartesian_to_spherical({0.0, 2.0, 0.0});
  EXPECT_EQ(s.azimuth, 0.0);
  EXPECT_EQ(s.elevation, 0.0);
  EXPECT_DOUBLE_EQ(report_azimuth_deg(s.azimuth), 90.0);
  EXPECT_THROW(cartesian_to_spherical({0, 0, 0}), DomainError);
  EXPECT_THROW(cartesian_to_spherical({0, -1, 0}), DomainError);
  EXPECT_THROW(spherical_to_cartesian({1.0, 1.2, 1.2}), DomainError);
}

TEST(Geometry, StandardLayout) {
  RadarConfig cfg;
  const auto layout = VirtualArrayLayout::standard(cfg);
  EXPECT_NO_THROW(layout.validate());
  EXPECT_DOUBLE_EQ(layout.spacing, cfg.wavelength() / 2.0);
  const auto ap = layout.azimuth_aperture();
  for (std::size_t i = 0; i < ap.size(); ++i) {
    EXPECT_EQ(layout.positions[ap[i]].x, static_cast<int>(i));
    EXPECT_EQ(layout.positions[ap[i]].z, 0);
  }
  for (const auto& [lo, hi] : layout.elevation_pairs) {
    EXPECT_EQ(layout.positions[lo].x, layout.positions[hi].x);
    EXPECT_EQ(layout.positions[hi].z - layout.positions[lo].z, 1);
  }
  // Boresight plane wave: equal phase everywhere; 30 deg azimuth: pi/2 per element.
  EXPECT_EQ(layout.phase(7, 0.0, 0.0, cfg), 0.0);
  EXPECT_NEAR(layout.phase(1, 0.5, 0.0, cfg), std::numbers::pi / 2.0, 1e-12);
  EXPECT_NEAR(layout.phase(8, 0.0, 0.5, cfg) - layout.phase(2, 0.0, 0.5, cfg), std::numbers::pi / 2.0, 1e-12);

  auto broken = layout;
  broken.azimuth_rows[1] = {0, 5, 6, 7};
  EXPECT_THROW(broken.validate(), ConfigError);
}

TEST(DataCubeTest, ShapeAndPredicates) {
  const auto cfg = test::small_config();
  DataCube cube(cfg);
  EXPECT_EQ(cube.chirps(), 16U);
  EXPECT_EQ(cube.samples(), 64U);
  EXPECT_EQ(cube.antennas(), kVirtualAntennas);
  EXPECT_TRUE(cube.matches(cfg));
  EXPECT_TRUE(cube.all_zero());
  EXPECT_TRUE(cube.all_finite());
  cube.at(1, 2, 3) = {std::nan(""), 0.0};
  EXPECT_FALSE(cube.all_finite());
  EXPECT_FALSE(cube.matches(RadarConfig{}));
}
