#include "dronerad/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dronerad/errors.hpp"

namespace dronerad {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxElevationDeg = 14.0;
constexpr double kMinRange = 1.05;
constexpr double kMaxRange = 3.95;

bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

// Adds every scatterer's IF return for one chirp. Amplitudes are final received amplitudes.
class ChirpAccumulator {
 public:
  ChirpAccumulator(const RadarConfig& cfg, const VirtualArrayLayout& layout)
      : cfg_(cfg),
        layout_(layout),
        lambda_(cfg.wavelength()),
        max_range_(derived_params(cfg).max_range),
        tone_(cfg.samples_per_chirp) {}

  void add(DataCube& cube, std::size_t chirp, std::span<const Scatterer> scatterers, std::vector<char>& dropped) {
    dropped.resize(std::max(dropped.size(), scatterers.size()), 0);
    const std::size_t ns = cube.samples();
    for (std::size_t k = 0; k < scatterers.size(); ++k) {
      const auto& s = scatterers[k];
      const double r = s.position.norm();
      if (!(r > 0.0) || r >= max_range_) {
        dropped[k] = 1;
        continue;
      }
      if (s.amplitude == 0.0) {
        continue;
      }
      const double ux = s.position.x / r;
      const double uz = s.position.z / r;
      std::array<cdouble, kVirtualAntennas> steer;
      for (std::size_t v = 0; v < kVirtualAntennas; ++v) {
        steer[v] = std::polar(1.0, layout_.phase(v, ux, uz, cfg_));
      }
      const double phase0 = 4.0 * std::numbers::pi * r / lambda_;
      const double step = kTwoPi * range_to_beat_freq(r, cfg_) / cfg_.adc_sample_rate;
      for (std::size_t n = 0; n < ns; ++n) {
        tone_[n] = std::polar(s.amplitude, phase0 + step * static_cast<double>(n));
      }
      for (std::size_t n = 0; n < ns; ++n) {
        auto fiber = cube.values().fiber(chirp, n);
        const cdouble t = tone_[n];
        for (std::size_t v = 0; v < kVirtualAntennas; ++v) {
          fiber[v] += t * steer[v];
        }
      }
    }
  }

 private:
  const RadarConfig& cfg_;
  const VirtualArrayLayout& layout_;
  double lambda_;
  double max_range_;
  std::vector<cdouble> tone_;
};

void add_noise(DataCube& cube, double noise_std, std::uint64_t seed, std::size_t frame_index) {
  if (noise_std <= 0.0) {
    return;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame_index), static_cast<std::uint32_t>(frame_index >> 32),
                    0x5eedu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, noise_std / std::numbers::sqrt2);
  for (auto& c : cube.values().data()) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    c += cdouble(re, im);
  }
}

void check_frame(const DataCube& cube) {
  if (!cube.all_finite()) {
    throw Error("synthesized frame contains non-finite samples");
  }
}

struct AxisMotion {
  std::array<double, 3> amp{};
  std::array<double, 3> freq{};
  std::array<double, 3> phase{};
};

}  // namespace

void DroneModel::validate() const {
  if (!(body_rcs >= 0.0) || !(tip_rcs >= 0.0)) {
    throw ConfigError("drone RCS values must be non-negative");
  }
  if (!(rotor_radius > 0.0)) {
    throw ConfigError("rotor_radius must be positive");
  }
  if (!(rotor_rpm >= 0.0)) {
    throw ConfigError("rotor_rpm must be non-negative");
  }
  if (!(body_occlusion_factor >= 0.0 && body_occlusion_factor <= 1.0)) {
    throw ConfigError("body_occlusion_factor must lie in [0, 1]");
  }
  if (rotor_offsets.size() != rotor_count) {
    throw ConfigError("rotor_offsets must list one hub per rotor");
  }
  if (rotor_count > 0 && blade_tips_per_rotor == 0) {
    throw ConfigError("rotors need at least one blade tip");
  }
}

DroneModel DroneModel::point_target(double rcs) {
  DroneModel d;
  d.body_rcs = rcs;
  d.rotor_count = 0;
  d.rotor_offsets.clear();
  return d;
}

Pose Trajectory::pose_at(double t) const {
  if (samples.empty()) {
    throw ConfigError("trajectory has no samples");
  }
  if (t < samples.front().t - 1e-12) {
    throw ConfigError("time precedes the trajectory");
  }
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const TrajectorySample& s) { return v < s.t; });
  if (it == samples.end()) {
    const auto& s = samples.back();
    const double dt = t - s.t;
    return {s.position + s.velocity * dt, s.velocity, s.heading};
  }
  if (it == samples.begin()) {
    return {it->position, it->velocity, it->heading};
  }
  const auto& a = *(it - 1);
  const auto& b = *it;
  const double h = b.t - a.t;
  const double u = (t - a.t) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  const double d00 = (6 * u2 - 6 * u) / h;
  const double d10 = 3 * u2 - 4 * u + 1;
  const double d01 = (-6 * u2 + 6 * u) / h;
  const double d11 = 3 * u2 - 2 * u;
  Pose p;
  p.position = a.position * h00 + a.velocity * (h * h10) + b.position * h01 + b.velocity * (h * h11);
  p.velocity = a.position * d00 + a.velocity * d10 + b.position * d01 + b.velocity * d11;
  p.heading = a.heading + (b.heading - a.heading) * u;
  return p;
}

Trajectory gen_trajectory(std::uint64_t seed, double duration, const RoomBounds& bounds, double max_speed,
                          double sample_period) {
  if (!(duration > 0.0) || !(sample_period > 0.0)) {
    throw ConfigError("duration and sample period must be positive");
  }
  if (!(max_speed >= 0.0)) {
    throw ConfigError("max_speed must be non-negative");
  }
  if (!finite(bounds.min) || !finite(bounds.max) || bounds.min.x > bounds.max.x || bounds.min.y > bounds.max.y ||
      bounds.min.z > bounds.max.z) {
    throw ConfigError("room bounds are empty");
  }
  if (!(bounds.min.y > 0.0)) {
    throw ConfigError("room must lie in front of the sensor (y > 0)");
  }
  const double z_cap = bounds.min.y * std::tan(deg_to_rad(kMaxElevationDeg));
  Vec3 lo{bounds.min.x, bounds.min.y, std::max(bounds.min.z, -z_cap)};
  Vec3 hi{bounds.max.x, bounds.max.y, std::min(bounds.max.z, z_cap)};
  if (lo.z > hi.z) {
    throw ConfigError("room bounds leave no height within the elevation limit");
  }
  const Vec3 nearest{std::clamp(0.0, lo.x, hi.x), lo.y, std::clamp(0.0, lo.z, hi.z)};
  const Vec3 farthest{std::max(std::abs(lo.x), std::abs(hi.x)), hi.y, std::max(std::abs(lo.z), std::abs(hi.z))};
  if (nearest.norm() < kMinRange || farthest.norm() > kMaxRange) {
    throw ConfigError("room bounds must lie between 1.05 m and 3.95 m from the sensor");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<AxisMotion, 3> axes;
  for (auto& ax : axes) {
    double total = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      ax.amp[k] = 0.2 + 0.8 * unit(rng);
      total += ax.amp[k];
      ax.freq[k] = 0.02 + 0.10 * unit(rng);
      ax.phase[k] = kTwoPi * unit(rng);
    }
    for (auto& a : ax.amp) {
      a *= 0.45 / total;
    }
  }
  const double heading0 = kTwoPi * unit(rng) - std::numbers::pi;
  const double heading_phase = kTwoPi * unit(rng);

  const std::array<double, 3> extent{hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
  double bound_sq = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      s += axes[a].amp[k] * axes[a].freq[k];
    }
    bound_sq += std::pow(extent[a] * kTwoPi * s, 2);
  }
  // Scaling every frequency scales the speed bound linearly.
  const double scale = bound_sq > 0.0 ? max_speed / std::sqrt(bound_sq) : 0.0;
  for (auto& ax : axes) {
    for (auto& f : ax.freq) {
      f *= scale;
    }
  }
  const bool moving = scale > 0.0;

  Trajectory traj;
  traj.duration = duration;
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration / sample_period)));
  traj.samples.reserve(n);
  const std::array<double, 3> origin{lo.x, lo.y, lo.z};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * sample_period;
    std::array<double, 3> pos{};
    std::array<double, 3> vel{};
    for (std::size_t a = 0; a < 3; ++a) {
      double u = 0.5;
      double du = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double w = kTwoPi * axes[a].freq[k];
        u += axes[a].amp[k] * std::sin(w * t + axes[a].phase[k]);
        du += axes[a].amp[k] * w * std::cos(w * t + axes[a].phase[k]);
      }
      pos[a] = origin[a] + u * extent[a];
      vel[a] = du * extent[a];
    }
    const double heading = moving ? heading0 + 0.5 * std::sin(kTwoPi * 0.03 * t + heading_phase) : heading0;
    traj.samples.push_back({t, {pos[0], pos[1], pos[2]}, {vel[0], vel[1], vel[2]}, heading});
  }
  return traj;
}

void Scene::validate() const {
  drone.validate();
  if (trajectory.samples.empty()) {
    throw ConfigError("scene trajectory is empty");
  }
  if (!(noise_std >= 0.0)) {
    throw ConfigError("noise_std must be non-negative");
  }
  for (const auto& c : static_clutter) {
    if (!(c.amplitude >= 0.0)) {
      throw ConfigError("clutter amplitude must be non-negative");
    }
  }
  for (const auto& g : multipath_ghosts) {
    if (!(g.relative_amplitude >= 0.0) || !(g.delay_offset >= 0.0)) {
      throw ConfigError("ghost amplitude and delay must be non-negative");
    }
  }
}

std::vector<Scatterer> scatterers_at(const DroneModel& drone, const Pose& pose, double t) {
  std::vector<Scatterer> out;
  out.reserve(1 + drone.rotor_count * drone.blade_tips_per_rotor);
  const Vec3& p = pose.position;
  const double r = p.norm();
  const Vec3 los = r > 0.0 ? p * (1.0 / r) : Vec3{0.0, 1.0, 0.0};
  const double body_radial = pose.velocity.dot(los);
  out.push_back({p, drone.body_rcs, body_radial});

  const double ch = std::cos(pose.heading);
  const double sh = std::sin(pose.heading);
  const double omega = drone.rotor_rpm * kTwoPi / 60.0;
  for (std::size_t m = 0; m < drone.rotor_count; ++m) {
    const Vec3& o = drone.rotor_offsets[m];
    const Vec3 off{ch * o.x - sh * o.y, sh * o.x + ch * o.y, o.z};
    const Vec3 hub = p + off;
    const double amp = drone.tip_rcs * (off.dot(los) > 0.0 ? drone.body_occlusion_factor : 1.0);
    const double dir = (m % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t k = 0; k < drone.blade_tips_per_rotor; ++k) {
      const double phi = dir * omega * t + 0.7 * static_cast<double>(m) + pose.heading +
                         kTwoPi * static_cast<double>(k) / static_cast<double>(drone.blade_tips_per_rotor);
      const Vec3 tip = hub + Vec3{drone.rotor_radius * std::cos(phi), drone.rotor_radius * std::sin(phi), 0.0};
      const Vec3 v_tan = Vec3{-std::sin(phi), std::cos(phi), 0.0} * (dir * omega * drone.rotor_radius);
      const double tr = tip.norm();
      const double radial = body_radial + (tr > 0.0 ? v_tan.dot(tip * (1.0 / tr)) : 0.0);
      out.push_back({tip, amp, radial});
    }
  }
  return out;
}

DataCube synthesize_frame(const Scene& scene, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                          std::size_t frame_index, SynthesisStats* stats) {
  scene.validate();
  const double t0 = static_cast<double>(frame_index) * cfg.frame_period;
  if (t0 > scene.trajectory.samples.back().t + cfg.frame_period + 1e-9) {
    throw ConfigError("trajectory does not cover frame " + std::to_string(frame_index));
  }
  DataCube cube(cfg);
  cube.frame_index = frame_index;
  cube.timestamp = t0;
  ChirpAccumulator acc(cfg, layout);
  std::vector<char> dropped;
  std::vector<Scatterer> list;
  std::size_t per_chirp = 0;
  for (std::size_t c = 0; c < cfg.chirps_per_frame; ++c) {
    const double t = t0 + static_cast<double>(c) * cfg.chirp_period;
    list = scatterers_at(scene.drone, scene.trajectory.pose_at(t), t);
    const Scatterer body = list.front();
    const double body_r = body.position.norm();
    auto falloff = [&](double r) { return scene.range_falloff && r > 0.0 ? 1.0 / (r * r) : 1.0; };
    for (auto& s : list) {
      s.amplitude *= falloff(s.position.norm());
    }
    const double body_amp = list.front().amplitude;
    if (!scene.multipath_ghosts.empty()) {
      const SphericalPoint sp = cartesian_to_spherical(body.position);
      for (const auto& g : scene.multipath_ghosts) {
        const SphericalPoint gp{body_r + g.delay_offset, sp.azimuth + g.azimuth_offset,
                                sp.elevation + g.elevation_offset};
        list.push_back({spherical_to_cartesian(gp), body_amp * g.relative_amplitude, body.radial_velocity});
      }
    }
    for (const auto& cl : scene.static_clutter) {
      list.push_back({cl.position, cl.amplitude * falloff(cl.position.norm()), 0.0});
    }
    per_chirp = list.size();
    acc.add(cube, c, list, dropped);
  }
  add_noise(cube, scene.noise_std, scene.seed, frame_index);
  check_frame(cube);
  if (stats != nullptr) {
    stats->scatterers = per_chirp;
    stats->dropped = static_cast<std::size_t>(std::count(dropped.begin(), dropped.end(), 1));
  }
  return cube;
}

DataCube synthesize_points(std::span<const PointScatterer> points, const RadarConfig& cfg,
                           const VirtualArrayLayout& layout, const PointFrameOptions& options,
                           SynthesisStats* stats) {
  cfg.validate();
  if (!(options.noise_std >= 0.0)) {
    throw ConfigError("noise_std must be non-negative");
  }
  DataCube cube(cfg);
  cube.frame_index = options.frame_index;
  cube.timestamp = options.timestamp;
  ChirpAccumulator acc(cfg, layout);
  std::vector<char> dropped;
  std::vector<Scatterer> list(points.size());
  for (std::size_t c = 0; c < cfg.chirps_per_frame; ++c) {
    const double dt = static_cast<double>(c) * cfg.chirp_period;
    for (std::size_t k = 0; k < points.size(); ++k) {
      list[k].position = points[k].position + points[k].velocity * dt;
      list[k].amplitude = points[k].amplitude;
    }
    acc.add(cube, c, list, dropped);
  }
  add_noise(cube, options.noise_std, options.seed, options.frame_index);
  check_frame(cube);
  if (stats != nullptr) {
    stats->scatterers = points.size();
    stats->dropped = static_cast<std::size_t>(std::count(dropped.begin(), dropped.end(), 1));
  }
  return cube;
}

Scene bench_scene(const BenchSpec& spec, std::size_t index, const RadarConfig& cfg) {
  Scene scene;
  scene.seed = spec.first_seed + index;
  scene.trajectory = gen_trajectory(scene.seed, spec.duration, spec.bounds, spec.max_speed, cfg.frame_period);
  scene.noise_std = scene.drone.body_rcs * std::pow(10.0, -spec.body_snr_db / 20.0);
  if (spec.with_ghost) {
    scene.multipath_ghosts.push_back(spec.ghost);
  }
  scene.static_clutter = spec.clutter;
  scene.range_falloff = true;
  return scene;
}

std::size_t frame_count(double duration, const RadarConfig& cfg) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration / cfg.frame_period)));
}

}  // namespace dronerad
