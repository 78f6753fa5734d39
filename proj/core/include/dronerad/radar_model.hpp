#pragma once

// Core radar types and the closed-form FMCW range / velocity / angle equations
// shared by the simulator and every localization pipeline.
//
// Coordinate frame: right-handed, y forward (boresight), x right, z up.
// Angles are direction-cosine angles measured from boresight:
//   azimuth   = asin(x / r)   (what the horizontal row measures)
//   elevation = asin(z / r)   (what the vertical pairs measure)
// Reports convert azimuth to the 30..150 degree convention via 90 deg + azimuth.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <utility>

#include "dronerad/array.hpp"

namespace dronerad {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }
  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  bool operator==(const Vec3&) const = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

/// Range in metres plus direction-cosine azimuth / elevation in radians.
struct SphericalPoint {
  double range = 0.0;
  double azimuth = 0.0;
  double elevation = 0.0;
};

/// Throws DomainError when sin^2(az) + sin^2(el) > 1 (direction outside the visible hemisphere).
Vec3 spherical_to_cartesian(const SphericalPoint& p);
/// Throws DomainError for the origin or a point behind the sensor (y < 0).
SphericalPoint cartesian_to_spherical(const Vec3& p);

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Azimuth in the 30..150 degree reporting convention (90 = boresight).
inline double report_azimuth_deg(double azimuth_rad) { return 90.0 + rad_to_deg(azimuth_rad); }

/// Chirp, frame and sampling parameters. Defaults describe a 60 GHz 3Tx/4Rx sensor
/// running 128 chirps of 256 samples per 100 ms frame.
struct RadarConfig {
  double carrier_freq = 60e9;          // Hz
  double chirp_slope = 60e12;          // Hz/s (60 MHz/us)
  double adc_sample_rate = 5e6;        // Hz
  std::size_t samples_per_chirp = 256;
  std::size_t chirps_per_frame = 128;
  double chirp_period = 60e-6;         // s
  double frame_period = 0.1;           // s

  double wavelength() const { return kSpeedOfLight / carrier_freq; }

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  bool operator==(const RadarConfig&) const = default;
};

struct DerivedParams {
  double range_resolution = 0.0;          // m
  double max_range = 0.0;                 // m, Nyquist-limited
  double velocity_resolution = 0.0;       // m/s
  double max_unambiguous_velocity = 0.0;  // m/s
};

DerivedParams derived_params(const RadarConfig& cfg);

/// d = f_IF c / (2 S). Throws DomainError for negative frequency.
double freq_to_range(double f_if, const RadarConfig& cfg);
/// Inverse of freq_to_range.
double range_to_beat_freq(double range, const RadarConfig& cfg);

/// v = lambda dphi / (4 pi Tc); positive means receding. |dphi| must not exceed pi.
double phase_to_velocity(double delta_phi, const RadarConfig& cfg);
/// Chirp-to-chirp phase step of a scatterer with radial velocity v (not wrapped).
double velocity_to_phase(double velocity, const RadarConfig& cfg);

/// theta = asin(lambda omega / (2 pi d)). Throws DomainError outside the visible region.
double phase_to_angle(double omega, double spacing, const RadarConfig& cfg);

/// Position of a virtual antenna in units of the element spacing.
struct AntennaPosition {
  int x = 0;
  int z = 0;
  bool operator==(const AntennaPosition&) const = default;
};

inline constexpr std::size_t kVirtualAntennas = 12;

/// 12-element virtual array. Rows 0 and 1 share z = 0 and together form an 8-element
/// uniform horizontal aperture; VAs 8..11 sit one spacing above VAs 2..5.
struct VirtualArrayLayout {
  std::array<AntennaPosition, kVirtualAntennas> positions{};
  std::array<std::array<std::size_t, 4>, 2> azimuth_rows{};
  /// (lower, upper) VA indices of each vertical pair.
  std::array<std::pair<std::size_t, std::size_t>, 4> elevation_pairs{};
  double spacing = 0.0;  // m

  static VirtualArrayLayout standard(const RadarConfig& cfg);

  void validate() const;

  /// Concatenated azimuth rows ordered by x.
  std::array<std::size_t, 8> azimuth_aperture() const;

  /// Phase (rad) seen by VA v for a plane wave from direction cosines (ux, uz).
  double phase(std::size_t v, double ux, double uz, const RadarConfig& cfg) const {
    const auto& p = positions[v];
    return 2.0 * std::numbers::pi * spacing * (p.x * ux + p.z * uz) / cfg.wavelength();
  }
};

/// One frame of complex baseband samples indexed [chirp][sample][virtual antenna].
class DataCube {
 public:
  DataCube() = default;
  DataCube(std::size_t chirps, std::size_t samples, std::size_t antennas = kVirtualAntennas)
      : samples_(chirps, samples, antennas) {}
  explicit DataCube(const RadarConfig& cfg)
      : DataCube(cfg.chirps_per_frame, cfg.samples_per_chirp, kVirtualAntennas) {}

  std::size_t chirps() const noexcept { return samples_.dim0(); }
  std::size_t samples() const noexcept { return samples_.dim1(); }
  std::size_t antennas() const noexcept { return samples_.dim2(); }

  cdouble& at(std::size_t chirp, std::size_t sample, std::size_t va) { return samples_(chirp, sample, va); }
  const cdouble& at(std::size_t chirp, std::size_t sample, std::size_t va) const {
    return samples_(chirp, sample, va);
  }

  Cube<cdouble>& values() noexcept { return samples_; }
  const Cube<cdouble>& values() const noexcept { return samples_; }

  bool matches(const RadarConfig& cfg) const {
    return chirps() == cfg.chirps_per_frame && samples() == cfg.samples_per_chirp &&
           antennas() == kVirtualAntennas;
  }
  bool all_finite() const;
  bool all_zero() const;

  std::size_t frame_index = 0;
  double timestamp = 0.0;  // s, time of the first chirp

  bool operator==(const DataCube&) const = default;

 private:
  Cube<cdouble> samples_;
};

struct PositionEstimate {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double timestamp = 0.0;

  Vec3 position() const { return {x, y, z}; }
};

// Flat `key = value` text serialization. Keys match the RadarConfig member names.
// Blank lines and lines starting with '#' are ignored.
std::map<std::string, std::string> parse_key_values(const std::string& text);
/// Builds a config from the radar keys in `values`, consuming them; other keys are left in place.
RadarConfig config_from_values(std::map<std::string, std::string>& values);
std::string config_to_string(const RadarConfig& cfg);
RadarConfig config_from_string(const std::string& text);
void write_config(const RadarConfig& cfg, const std::filesystem::path& path);
RadarConfig read_config(const std::filesystem::path& path);

/// FNV-1a 64-bit digest of the canonical config text; stamped into capture headers.
std::uint64_t config_digest(const RadarConfig& cfg);

}  // namespace dronerad
