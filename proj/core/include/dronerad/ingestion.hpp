#pragma once

// RCUB raw-capture container and the offline time-alignment helpers.
//
// Layout (all integers little-endian):
//   offset  0  magic "RCUB"
//   offset  4  u16 version (1)
//   offset  6  u64 config digest (see config_digest)
//   offset 14  u32 frame_count
//   offset 18  u16 sample encoding: 0 = int16 interleaved IQ, 1 = float32 complex
//   offset 20  frames, each chirp-major, then sample, then VA; every sample is (I, Q)
// int16 samples hold round(x * 2^15) clamped to the int16 range.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include "dronerad/radar_model.hpp"

namespace dronerad {

enum class SampleEncoding : std::uint16_t { int16_iq = 0, float32 = 1 };

inline constexpr std::uint16_t kRcubVersion = 1;
inline constexpr std::size_t kRcubHeaderBytes = 20;

struct RawCaptureHeader {
  std::uint16_t version = kRcubVersion;
  std::uint64_t config_digest = 0;
  std::uint32_t frame_count = 0;
  SampleEncoding encoding = SampleEncoding::float32;
};

std::size_t frame_bytes(const RadarConfig& cfg, SampleEncoding encoding);

std::vector<std::uint8_t> encode_header(const RawCaptureHeader& header);
/// Validates magic, version and encoding. Throws ParseError naming the offending offset.
RawCaptureHeader decode_header(std::span<const std::uint8_t> bytes);

/// Appends one frame's payload. Throws ConfigError when the cube does not match cfg.
void encode_frame(const DataCube& cube, const RadarConfig& cfg, SampleEncoding encoding,
                  std::vector<std::uint8_t>& out);
DataCube decode_frame(std::span<const std::uint8_t> payload, const RadarConfig& cfg, SampleEncoding encoding);

std::vector<std::uint8_t> serialize_capture(std::span<const DataCube> cubes, const RadarConfig& cfg,
                                            SampleEncoding encoding);
/// Parses a whole capture held in memory. Frame i gets frame_index i and timestamp i * frame_period.
/// Throws ParseError (bad magic, version, digest, encoding, trailing bytes) or TruncationError.
std::vector<DataCube> parse_capture(std::span<const std::uint8_t> bytes, const RadarConfig& cfg);

/// Single-writer streaming RCUB writer; the frame count is patched into the header on close().
class CaptureWriter {
 public:
  CaptureWriter(const std::filesystem::path& path, const RadarConfig& cfg, SampleEncoding encoding);
  ~CaptureWriter();
  CaptureWriter(const CaptureWriter&) = delete;
  CaptureWriter& operator=(const CaptureWriter&) = delete;

  void write(const DataCube& cube);
  void close();
  std::uint32_t frames_written() const noexcept { return frames_; }

 private:
  std::ofstream out_;
  RadarConfig cfg_;
  SampleEncoding encoding_;
  std::uint32_t frames_ = 0;
  std::vector<std::uint8_t> buffer_;
  bool closed_ = false;
};

/// Pull-based frame iterator over an RCUB file. The header and the file length are validated on
/// open, so a truncated file fails before any frame is returned.
class CaptureReader {
 public:
  CaptureReader(const std::filesystem::path& path, const RadarConfig& cfg);

  const RawCaptureHeader& header() const noexcept { return header_; }
  std::size_t frame_count() const noexcept { return header_.frame_count; }
  /// Next frame, or nullopt after the last one.
  std::optional<DataCube> next();
  /// Repositions so that next() returns frame i.
  void seek(std::size_t frame);

 private:
  std::ifstream in_;
  RadarConfig cfg_;
  RawCaptureHeader header_;
  std::size_t next_ = 0;
  std::vector<std::uint8_t> buffer_;
};

/// t_i = start_time + i * frame_period. Throws ConfigError for a non-positive period.
std::vector<double> extrapolate_timestamps(double start_time, double frame_period, std::size_t n_frames);

struct TimedPosition {
  double t = 0.0;
  Vec3 position;
};

struct AlignedLabels {
  /// One entry per frame; empty when the frame lies outside the ground-truth time span.
  std::vector<std::optional<Vec3>> labels;
  std::size_t dropped = 0;
};

/// Linear interpolation of the ground-truth series at every frame time. Throws ConfigError
/// with fewer than two samples or an unsorted series.
AlignedLabels align_ground_truth(std::span<const double> frame_times, std::span<const TimedPosition> gt);

}  // namespace dronerad
