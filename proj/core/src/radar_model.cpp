#include "dronerad/radar_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dronerad/errors.hpp"

namespace dronerad {

Vec3 spherical_to_cartesian(const SphericalPoint& p) {
  const double ux = std::sin(p.azimuth);
  const double uz = std::sin(p.elevation);
  const double uy2 = 1.0 - ux * ux - uz * uz;
  if (uy2 < 0.0) {
    throw DomainError("direction outside the visible hemisphere");
  }
  return {p.range * ux, p.range * std::sqrt(uy2), p.range * uz};
}

SphericalPoint cartesian_to_spherical(const Vec3& p) {
  const double r = p.norm();
  if (!(r > 0.0) || p.y < 0.0) {
    throw DomainError("point is not in front of the sensor");
  }
  return {r, std::asin(std::clamp(p.x / r, -1.0, 1.0)), std::asin(std::clamp(p.z / r, -1.0, 1.0))};
}

void RadarConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(carrier_freq) || !positive(chirp_slope) || !positive(adc_sample_rate) ||
      !positive(chirp_period) || !positive(frame_period)) {
    throw ConfigError("radar config fields must be finite and strictly positive");
  }
  if (samples_per_chirp < 2) {
    throw ConfigError("samples_per_chirp must be at least 2");
  }
  if (chirps_per_frame < 1) {
    throw ConfigError("chirps_per_frame must be at least 1");
  }
  // Relative slack absorbs the rounding of configs that sit exactly on the bound.
  const double sampling_time = static_cast<double>(samples_per_chirp) / adc_sample_rate;
  if (chirp_period < sampling_time * (1.0 - 1e-12)) {
    throw ConfigError("chirp_period shorter than the ADC sampling window");
  }
  if (frame_period < static_cast<double>(chirps_per_frame) * chirp_period * (1.0 - 1e-12)) {
    throw ConfigError("frame_period shorter than chirps_per_frame * chirp_period");
  }
}

DerivedParams derived_params(const RadarConfig& cfg) {
  cfg.validate();
  const double lambda = cfg.wavelength();
  const double bandwidth = cfg.chirp_slope * static_cast<double>(cfg.samples_per_chirp) / cfg.adc_sample_rate;
  DerivedParams d;
  d.range_resolution = kSpeedOfLight / (2.0 * bandwidth);
  d.max_range = freq_to_range(cfg.adc_sample_rate / 2.0, cfg);
  d.velocity_resolution = lambda / (2.0 * static_cast<double>(cfg.chirps_per_frame) * cfg.chirp_period);
  d.max_unambiguous_velocity = lambda / (4.0 * cfg.chirp_period);
  return d;
}

double freq_to_range(double f_if, const RadarConfig& cfg) {
  if (!(f_if >= 0.0)) {
    throw DomainError("beat frequency must be non-negative");
  }
  return f_if * kSpeedOfLight / (2.0 * cfg.chirp_slope);
}

double range_to_beat_freq(double range, const RadarConfig& cfg) {
  if (!(range >= 0.0)) {
    throw DomainError("range must be non-negative");
  }
  return 2.0 * cfg.chirp_slope * range / kSpeedOfLight;
}

double phase_to_velocity(double delta_phi, const RadarConfig& cfg) {
  if (!(std::abs(delta_phi) <= std::numbers::pi)) {
    throw DomainError("phase difference must be wrapped to [-pi, pi]");
  }
  return cfg.wavelength() * delta_phi / (4.0 * std::numbers::pi * cfg.chirp_period);
}

double velocity_to_phase(double velocity, const RadarConfig& cfg) {
  return 4.0 * std::numbers::pi * velocity * cfg.chirp_period / cfg.wavelength();
}

double phase_to_angle(double omega, double spacing, const RadarConfig& cfg) {
  if (!(spacing > 0.0)) {
    throw DomainError("antenna spacing must be positive");
  }
  const double arg = cfg.wavelength() * omega / (2.0 * std::numbers::pi * spacing);
  // Slack of a few ulps so the endfire bins of a half-wavelength array stay valid.
  if (!(std::abs(arg) <= 1.0 + 1e-12)) {
    throw DomainError("phase difference maps outside the visible region");
  }
  return std::asin(std::clamp(arg, -1.0, 1.0));
}

VirtualArrayLayout VirtualArrayLayout::standard(const RadarConfig& cfg) {
  VirtualArrayLayout layout;
  for (int i = 0; i < 8; ++i) {
    layout.positions[static_cast<std::size_t>(i)] = {i, 0};
  }
  for (int i = 0; i < 4; ++i) {
    layout.positions[static_cast<std::size_t>(8 + i)] = {2 + i, 1};
  }
  layout.azimuth_rows = {{{0, 1, 2, 3}, {4, 5, 6, 7}}};
  layout.elevation_pairs = {{{2, 8}, {3, 9}, {4, 10}, {5, 11}}};
  layout.spacing = cfg.wavelength() / 2.0;
  return layout;
}

void VirtualArrayLayout::validate() const {
  if (!(spacing > 0.0)) {
    throw ConfigError("VA spacing must be positive");
  }
  std::array<int, kVirtualAntennas> row_membership{};
  std::array<bool, kVirtualAntennas> covered{};
  for (const auto& row : azimuth_rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] >= kVirtualAntennas) {
        throw ConfigError("azimuth row index out of range");
      }
      ++row_membership[row[i]];
      covered[row[i]] = true;
      if (i > 0) {
        const auto& a = positions[row[i - 1]];
        const auto& b = positions[row[i]];
        if (b.x - a.x != 1 || b.z != a.z) {
          throw ConfigError("azimuth row is not a uniform single-spacing line");
        }
      }
    }
  }
  for (int m : row_membership) {
    if (m > 1) {
      throw ConfigError("VA appears in more than one azimuth row");
    }
  }
  for (const auto& [lo, hi] : elevation_pairs) {
    if (lo >= kVirtualAntennas || hi >= kVirtualAntennas) {
      throw ConfigError("elevation pair index out of range");
    }
    if (positions[lo].x != positions[hi].x || positions[hi].z - positions[lo].z != 1) {
      throw ConfigError("elevation pair is not a vertical single-spacing pair");
    }
    covered[lo] = covered[hi] = true;
  }
  if (std::find(covered.begin(), covered.end(), false) != covered.end()) {
    throw ConfigError("VA belongs to neither an azimuth row nor an elevation pair");
  }
}

std::array<std::size_t, 8> VirtualArrayLayout::azimuth_aperture() const {
  std::array<std::size_t, 8> out{};
  std::copy(azimuth_rows[0].begin(), azimuth_rows[0].end(), out.begin());
  std::copy(azimuth_rows[1].begin(), azimuth_rows[1].end(), out.begin() + 4);
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return positions[a].x < positions[b].x; });
  return out;
}

bool DataCube::all_finite() const {
  return std::all_of(samples_.data().begin(), samples_.data().end(),
                     [](const cdouble& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

bool DataCube::all_zero() const {
  return std::all_of(samples_.data().begin(), samples_.data().end(),
                     [](const cdouble& c) { return c == cdouble{}; });
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + key + "' has non-numeric value '" + v + "'");
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer, got '" + v + "'");
  }
  return out;
}

}  // namespace

std::string config_to_string(const RadarConfig& cfg) {
  std::ostringstream os;
  os << "carrier_freq = " << format_double(cfg.carrier_freq) << '\n'
     << "chirp_slope = " << format_double(cfg.chirp_slope) << '\n'
     << "adc_sample_rate = " << format_double(cfg.adc_sample_rate) << '\n'
     << "samples_per_chirp = " << cfg.samples_per_chirp << '\n'
     << "chirps_per_frame = " << cfg.chirps_per_frame << '\n'
     << "chirp_period = " << format_double(cfg.chirp_period) << '\n'
     << "frame_period = " << format_double(cfg.frame_period) << '\n';
  return os.str();
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t offset = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + " is not 'key = value'", line_offset);
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError("line " + std::to_string(line_no) + " has an empty key or value", line_offset);
    }
    if (!out.emplace(key, value).second) {
      throw ParseError("duplicate key '" + key + "'", line_offset);
    }
  }
  return out;
}

RadarConfig config_from_values(std::map<std::string, std::string>& values) {
  RadarConfig cfg;
  auto take = [&](const char* key, auto apply) {
    if (auto it = values.find(key); it != values.end()) {
      apply(it->second);
      values.erase(it);
    }
  };
  take("carrier_freq", [&](const std::string& v) { cfg.carrier_freq = parse_double("carrier_freq", v); });
  take("chirp_slope", [&](const std::string& v) { cfg.chirp_slope = parse_double("chirp_slope", v); });
  take("adc_sample_rate", [&](const std::string& v) { cfg.adc_sample_rate = parse_double("adc_sample_rate", v); });
  take("samples_per_chirp",
       [&](const std::string& v) { cfg.samples_per_chirp = parse_count("samples_per_chirp", v); });
  take("chirps_per_frame", [&](const std::string& v) { cfg.chirps_per_frame = parse_count("chirps_per_frame", v); });
  take("chirp_period", [&](const std::string& v) { cfg.chirp_period = parse_double("chirp_period", v); });
  take("frame_period", [&](const std::string& v) { cfg.frame_period = parse_double("frame_period", v); });
  cfg.validate();
  return cfg;
}

RadarConfig config_from_string(const std::string& text) {
  auto values = parse_key_values(text);
  RadarConfig cfg = config_from_values(values);
  if (!values.empty()) {
    throw ConfigError("unknown config key '" + values.begin()->first + "'");
  }
  return cfg;
}

void write_config(const RadarConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  out << config_to_string(cfg);
  if (!out) {
    throw Error("failed writing " + path.string());
  }
}

RadarConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_string(ss.str());
}

std::uint64_t config_digest(const RadarConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_string(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace dronerad
