#pragma once

// Ideal dechirped-IF simulator for a quadcopter in a room: a body scatterer, rotating
// blade-tip scatterers, static clutter, multipath ghosts and complex white noise.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dronerad/radar_model.hpp"

namespace dronerad {

struct DroneModel {
  double body_rcs = 1.0;
  double tip_rcs = 0.1;
  std::size_t rotor_count = 4;
  std::size_t blade_tips_per_rotor = 2;
  double rotor_radius = 0.06;  // m
  double rotor_rpm = 8000.0;
  /// Rotor hub offsets in the body frame (x right, y nose, z up at heading 0). One per rotor.
  std::vector<Vec3> rotor_offsets{{0.17, 0.17, 0.02}, {-0.17, 0.17, 0.02}, {-0.17, -0.17, 0.02}, {0.17, -0.17, 0.02}};
  /// Attenuation of rotors whose hub lies behind the body centre as seen from the sensor.
  double body_occlusion_factor = 0.4;

  void validate() const;

  /// Body-only target (no rotors): the single-scatterer case.
  static DroneModel point_target(double rcs = 1.0);
};

struct Pose {
  Vec3 position;
  Vec3 velocity;
  double heading = 0.0;  // rad, rotation about z
};

struct TrajectorySample {
  double t = 0.0;
  Vec3 position;
  Vec3 velocity;
  double heading = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double duration = 0.0;

  /// Cubic Hermite interpolation between samples; linear extrapolation past the last one.
  /// Throws ConfigError before the first sample or when empty.
  Pose pose_at(double t) const;
};

struct RoomBounds {
  Vec3 min;
  Vec3 max;
};

/// Smooth random flight inside `bounds`, sampled every `sample_period` seconds.
/// The usable vertical extent is narrowed so that |elevation| stays within 14 degrees, and
/// the box must lie within 1.05..3.95 m of the sensor. Throws ConfigError otherwise.
Trajectory gen_trajectory(std::uint64_t seed, double duration, const RoomBounds& bounds, double max_speed,
                          double sample_period = 0.1);

struct StaticScatterer {
  Vec3 position;
  double amplitude = 0.0;
};

/// Delayed copy of the body return. The direction offsets are applied to the body's
/// direction-cosine angles.
struct MultipathGhost {
  double delay_offset = 0.0;  // m of extra range
  double relative_amplitude = 0.0;
  double azimuth_offset = 0.0;    // rad
  double elevation_offset = 0.0;  // rad
};

struct Scene {
  DroneModel drone;
  Trajectory trajectory;
  std::vector<StaticScatterer> static_clutter;
  double noise_std = 0.0;  // complex noise std per sample
  std::vector<MultipathGhost> multipath_ghosts;
  std::uint64_t seed = 0;
  /// Scale amplitudes by (1 m / r)^2 so RCS values are referenced to 1 m.
  bool range_falloff = true;

  void validate() const;
};

struct Scatterer {
  Vec3 position;
  double amplitude = 0.0;
  double radial_velocity = 0.0;  // m/s, positive = receding
};

/// Body first, then rotor r's tips in order (r * tips_per_rotor + k).
std::vector<Scatterer> scatterers_at(const DroneModel& drone, const Pose& pose, double t);

struct SynthesisStats {
  std::size_t scatterers = 0;  // per chirp, before range gating
  std::size_t dropped = 0;     // distinct scatterers beyond max range at any chirp
};

/// Frame `frame_index` starts at frame_index * frame_period.
DataCube synthesize_frame(const Scene& scene, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                          std::size_t frame_index, SynthesisStats* stats = nullptr);

/// A point moving at constant velocity during the frame; amplitude is the received amplitude.
struct PointScatterer {
  Vec3 position;  // at the first chirp
  Vec3 velocity;
  double amplitude = 1.0;
};

struct PointFrameOptions {
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  std::size_t frame_index = 0;
  double timestamp = 0.0;
};

DataCube synthesize_points(std::span<const PointScatterer> points, const RadarConfig& cfg,
                           const VirtualArrayLayout& layout, const PointFrameOptions& options = {},
                           SynthesisStats* stats = nullptr);

/// Parameters of the seeded synthetic benchmark.
struct BenchSpec {
  std::string name = "sim-bench-v1";
  std::size_t sequences = 10;
  std::uint64_t first_seed = 0;
  double duration = 60.0;  // s
  RoomBounds bounds{{-1.0, 1.2, -0.3}, {1.0, 3.8, 0.8}};
  double max_speed = 1.0;          // m/s
  double body_snr_db = 15.0;       // per sample, body at the 1 m reference
  MultipathGhost ghost{0.6, 0.3, 0.0, 0.0};
  bool with_ghost = true;
  std::vector<StaticScatterer> clutter{{{-1.6, 4.6, 0.4}, 4.0}, {{1.4, 5.2, -0.2}, 6.0}, {{0.2, 5.6, 0.1}, 8.0}};

  static BenchSpec sim_bench_v1() { return {}; }
};

/// Scene for sequence `index` (seed = first_seed + index).
Scene bench_scene(const BenchSpec& spec, std::size_t index, const RadarConfig& cfg);

/// Frames in a sequence of `duration` seconds at the config's frame rate.
std::size_t frame_count(double duration, const RadarConfig& cfg);

}  // namespace dronerad
