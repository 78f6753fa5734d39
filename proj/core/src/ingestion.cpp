#include "dronerad/ingestion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "dronerad/errors.hpp"
#include "bytes.hpp"

namespace dronerad {
namespace {

using detail::get_le;
using detail::put_le;

constexpr std::array<std::uint8_t, 4> kMagic{'R', 'C', 'U', 'B'};
constexpr std::size_t kVersionOffset = 4;
constexpr std::size_t kDigestOffset = 6;
constexpr std::size_t kFrameCountOffset = 14;
constexpr std::size_t kEncodingOffset = 18;
constexpr double kInt16Scale = 32768.0;

std::int16_t quantize(double x) {
  const double q = std::round(x * kInt16Scale);
  return static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
}

void check_digest(const RawCaptureHeader& h, const RadarConfig& cfg) {
  if (h.config_digest != config_digest(cfg)) {
    throw ParseError("capture was recorded with a different radar config", kDigestOffset);
  }
}

std::size_t checked_frames(const RawCaptureHeader& h, const RadarConfig& cfg, std::uint64_t actual) {
  const std::uint64_t fb = frame_bytes(cfg, h.encoding);
  const std::uint64_t expected = kRcubHeaderBytes + static_cast<std::uint64_t>(h.frame_count) * fb;
  if (actual < expected) {
    const std::uint64_t frame = (actual - kRcubHeaderBytes) / fb;
    throw TruncationError("capture truncated in frame " + std::to_string(frame) + ": expected " +
                              std::to_string(expected) + " bytes, found " + std::to_string(actual),
                          frame, expected, actual);
  }
  if (actual > expected) {
    throw ParseError("capture has " + std::to_string(actual - expected) + " trailing bytes", expected);
  }
  return h.frame_count;
}

void stamp(DataCube& cube, std::size_t index, const RadarConfig& cfg) {
  cube.frame_index = index;
  cube.timestamp = static_cast<double>(index) * cfg.frame_period;
}

}  // namespace

std::size_t frame_bytes(const RadarConfig& cfg, SampleEncoding encoding) {
  const std::size_t per_sample = encoding == SampleEncoding::int16_iq ? 4 : 8;
  return cfg.chirps_per_frame * cfg.samples_per_chirp * kVirtualAntennas * per_sample;
}

std::vector<std::uint8_t> encode_header(const RawCaptureHeader& header) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_le<std::uint16_t>(out, header.version);
  put_le<std::uint64_t>(out, header.config_digest);
  put_le<std::uint32_t>(out, header.frame_count);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(header.encoding));
  return out;
}

RawCaptureHeader decode_header(std::span<const std::uint8_t> bytes) {
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (i >= bytes.size() || bytes[i] != kMagic[i]) {
      throw ParseError("bad magic: not an RCUB capture", 0);
    }
  }
  if (bytes.size() < kRcubHeaderBytes) {
    throw TruncationError("capture header truncated", 0, kRcubHeaderBytes, bytes.size());
  }
  RawCaptureHeader h;
  h.version = get_le<std::uint16_t>(bytes.data() + kVersionOffset);
  if (h.version != kRcubVersion) {
    throw ParseError("unsupported RCUB version " + std::to_string(h.version), kVersionOffset);
  }
  h.config_digest = get_le<std::uint64_t>(bytes.data() + kDigestOffset);
  h.frame_count = get_le<std::uint32_t>(bytes.data() + kFrameCountOffset);
  const auto enc = get_le<std::uint16_t>(bytes.data() + kEncodingOffset);
  if (enc > 1) {
    throw ParseError("unknown sample encoding " + std::to_string(enc), kEncodingOffset);
  }
  h.encoding = static_cast<SampleEncoding>(enc);
  return h;
}

void encode_frame(const DataCube& cube, const RadarConfig& cfg, SampleEncoding encoding,
                  std::vector<std::uint8_t>& out) {
  if (!cube.matches(cfg)) {
    throw ConfigError("cube shape does not match the radar config");
  }
  out.reserve(out.size() + frame_bytes(cfg, encoding));
  for (const cdouble& c : cube.values().data()) {
    if (encoding == SampleEncoding::int16_iq) {
      put_le<std::uint16_t>(out, static_cast<std::uint16_t>(quantize(c.real())));
      put_le<std::uint16_t>(out, static_cast<std::uint16_t>(quantize(c.imag())));
    } else {
      detail::put_f32(out, static_cast<float>(c.real()));
      detail::put_f32(out, static_cast<float>(c.imag()));
    }
  }
}

DataCube decode_frame(std::span<const std::uint8_t> payload, const RadarConfig& cfg, SampleEncoding encoding) {
  if (payload.size() != frame_bytes(cfg, encoding)) {
    throw ConfigError("frame payload size does not match the radar config");
  }
  DataCube cube(cfg);
  const std::uint8_t* p = payload.data();
  for (cdouble& c : cube.values().data()) {
    if (encoding == SampleEncoding::int16_iq) {
      const auto i = static_cast<std::int16_t>(get_le<std::uint16_t>(p));
      const auto q = static_cast<std::int16_t>(get_le<std::uint16_t>(p + 2));
      c = {i / kInt16Scale, q / kInt16Scale};
      p += 4;
    } else {
      c = {detail::get_f32(p), detail::get_f32(p + 4)};
      p += 8;
    }
  }
  return cube;
}

std::vector<std::uint8_t> serialize_capture(std::span<const DataCube> cubes, const RadarConfig& cfg,
                                            SampleEncoding encoding) {
  RawCaptureHeader h;
  h.config_digest = config_digest(cfg);
  h.frame_count = static_cast<std::uint32_t>(cubes.size());
  h.encoding = encoding;
  auto out = encode_header(h);
  for (const auto& c : cubes) {
    encode_frame(c, cfg, encoding, out);
  }
  return out;
}

std::vector<DataCube> parse_capture(std::span<const std::uint8_t> bytes, const RadarConfig& cfg) {
  const auto h = decode_header(bytes);
  check_digest(h, cfg);
  const std::size_t n = checked_frames(h, cfg, bytes.size());
  const std::size_t fb = frame_bytes(cfg, h.encoding);
  std::vector<DataCube> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(decode_frame(bytes.subspan(kRcubHeaderBytes + i * fb, fb), cfg, h.encoding));
    stamp(out.back(), i, cfg);
  }
  return out;
}

CaptureWriter::CaptureWriter(const std::filesystem::path& path, const RadarConfig& cfg, SampleEncoding encoding)
    : out_(path, std::ios::binary | std::ios::trunc), cfg_(cfg), encoding_(encoding) {
  cfg_.validate();
  if (!out_) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  RawCaptureHeader h;
  h.config_digest = config_digest(cfg_);
  h.encoding = encoding_;
  const auto bytes = encode_header(h);
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

CaptureWriter::~CaptureWriter() {
  try {
    close();
  } catch (...) {
  }
}

void CaptureWriter::write(const DataCube& cube) {
  if (closed_) {
    throw Error("capture writer already closed");
  }
  buffer_.clear();
  encode_frame(cube, cfg_, encoding_, buffer_);
  out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (!out_) {
    throw Error("failed writing capture frame");
  }
  ++frames_;
}

void CaptureWriter::close() {
  if (closed_) {
    return;
  }
  closed_ = true;
  std::vector<std::uint8_t> count;
  put_le<std::uint32_t>(count, frames_);
  out_.seekp(static_cast<std::streamoff>(kFrameCountOffset));
  out_.write(reinterpret_cast<const char*>(count.data()), static_cast<std::streamsize>(count.size()));
  out_.close();
  if (!out_) {
    throw Error("failed finalizing capture");
  }
}

CaptureReader::CaptureReader(const std::filesystem::path& path, const RadarConfig& cfg)
    : in_(path, std::ios::binary), cfg_(cfg) {
  if (!in_) {
    throw Error("cannot open " + path.string());
  }
  const std::uint64_t size = std::filesystem::file_size(path);
  std::vector<std::uint8_t> head(std::min<std::uint64_t>(size, kRcubHeaderBytes));
  in_.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  header_ = decode_header(head);
  check_digest(header_, cfg_);
  checked_frames(header_, cfg_, size);
}

std::optional<DataCube> CaptureReader::next() {
  if (next_ >= header_.frame_count) {
    return std::nullopt;
  }
  const std::size_t fb = frame_bytes(cfg_, header_.encoding);
  buffer_.resize(fb);
  in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(fb));
  if (in_.gcount() != static_cast<std::streamsize>(fb)) {
    const std::uint64_t start = kRcubHeaderBytes + next_ * fb;
    throw TruncationError("capture shrank while reading frame " + std::to_string(next_), next_, start + fb,
                          start + static_cast<std::uint64_t>(in_.gcount()));
  }
  auto cube = decode_frame(buffer_, cfg_, header_.encoding);
  stamp(cube, next_, cfg_);
  ++next_;
  return cube;
}

void CaptureReader::seek(std::size_t frame) {
  if (frame > header_.frame_count) {
    throw ConfigError("seek past the last frame");
  }
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(kRcubHeaderBytes + frame * frame_bytes(cfg_, header_.encoding)));
  next_ = frame;
}

std::vector<double> extrapolate_timestamps(double start_time, double frame_period, std::size_t n_frames) {
  if (!(frame_period > 0.0)) {
    throw ConfigError("frame period must be positive");
  }
  std::vector<double> t(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    t[i] = start_time + static_cast<double>(i) * frame_period;
  }
  return t;
}

AlignedLabels align_ground_truth(std::span<const double> frame_times, std::span<const TimedPosition> gt) {
  if (gt.size() < 2) {
    throw ConfigError("ground-truth alignment needs at least two samples");
  }
  for (std::size_t i = 1; i < gt.size(); ++i) {
    if (!(gt[i].t >= gt[i - 1].t)) {
      throw ConfigError("ground-truth series is not time-sorted");
    }
  }
  AlignedLabels out;
  out.labels.resize(frame_times.size());
  for (std::size_t f = 0; f < frame_times.size(); ++f) {
    const double t = frame_times[f];
    if (!(t >= gt.front().t && t <= gt.back().t)) {
      ++out.dropped;
      continue;
    }
    // First sample strictly after t; the interval is [it - 1, it].
    auto it = std::upper_bound(gt.begin(), gt.end(), t, [](double v, const TimedPosition& s) { return v < s.t; });
    if (it == gt.end()) {
      out.labels[f] = gt.back().position;
      continue;
    }
    const auto& a = *(it - 1);
    const auto& b = *it;
    const double u = b.t > a.t ? (t - a.t) / (b.t - a.t) : 0.0;
    out.labels[f] = a.position + (b.position - a.position) * u;
  }
  return out;
}

}  // namespace dronerad
