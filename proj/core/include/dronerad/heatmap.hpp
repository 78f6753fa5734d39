#pragma once

// Per-chirp range-azimuth / range-elevation heatmaps and the HTMP training-record format.
//
// HTMP record (little-endian), records concatenated back to back in one file:
//   offset  0  magic "HTMP"
//   offset  4  u16 version (1)
//   offset  6  u16 n_maps, u16 rows, u16 cols, u16 chirps
//   offset 14  f32 data, [chirp][map][row][col]; maps 0-1 azimuth, 2-5 elevation
//   then       3 x f64 label (x, y, z in m)
// manifest.csv: record_index,file_offset,frame_index,sequence_id

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dronerad/array.hpp"
#include "dronerad/dataset.hpp"
#include "dronerad/dsp.hpp"
#include "dronerad/radar_model.hpp"

namespace dronerad {

inline constexpr std::size_t kAzimuthMaps = 2;
inline constexpr std::size_t kElevationMaps = 4;
inline constexpr std::size_t kMapsPerChirp = kAzimuthMaps + kElevationMaps;
inline constexpr std::uint16_t kHtmpVersion = 1;
inline constexpr std::size_t kHtmpHeaderBytes = 14;
inline constexpr std::size_t kDefaultChirpsPerSample = 16;

/// Magnitude maps [range bin][angle bin], each scaled so its maximum is 1 (all-zero maps stay zero).
struct ChirpHeatmaps {
  std::array<Matrix<float>, kAzimuthMaps> azimuth_maps;
  std::array<Matrix<float>, kElevationMaps> elevation_maps;
  std::size_t chirp_index = 0;
  std::size_t frame_index = 0;

  /// Maps in record order: azimuth 0-1, then elevation 0-3.
  const Matrix<float>& map(std::size_t i) const {
    return i < kAzimuthMaps ? azimuth_maps[i] : elevation_maps[i - kAzimuthMaps];
  }
};

struct HeatmapParams {
  std::size_t range_fft = kDefaultRangeFft;
  std::size_t angle_fft = kDefaultAngleFft;
};

/// Heatmaps of one chirp after frame-level clutter removal. Azimuth map i is the angle spectrum
/// of azimuth row i; elevation map j that of elevation pair j (lower element first).
ChirpHeatmaps chirp_heatmaps(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                             std::size_t chirp_index, const HeatmapParams& params = {});
/// Same as chirp_heatmaps for several chirps, computing the clutter mean once.
std::vector<ChirpHeatmaps> frame_heatmaps(const DataCube& cube, const RadarConfig& cfg,
                                          const VirtualArrayLayout& layout, std::span<const std::size_t> chirps,
                                          const HeatmapParams& params = {});

/// Uniform subsample: chirp k * n_chirps / per_sample for k < per_sample.
std::vector<std::size_t> select_chirps(std::size_t n_chirps, std::size_t per_sample);

struct TrainingSample {
  std::vector<ChirpHeatmaps> heatmaps;
  Vec3 label;
};

struct HtmpRecord {
  std::uint16_t n_maps = 0;
  std::uint16_t rows = 0;
  std::uint16_t cols = 0;
  std::uint16_t chirps = 0;
  std::vector<float> data;  // [chirp][map][row][col]
  std::array<double, 3> label{};

  float at(std::size_t chirp, std::size_t map, std::size_t row, std::size_t col) const {
    return data[((chirp * n_maps + map) * rows + row) * cols + col];
  }
  bool operator==(const HtmpRecord&) const = default;
};

std::size_t htmp_record_bytes(std::size_t n_maps, std::size_t rows, std::size_t cols, std::size_t chirps);
HtmpRecord to_record(const TrainingSample& sample);
std::vector<std::uint8_t> encode_record(const HtmpRecord& record);
/// Decodes the record starting at `offset`. Throws ParseError (bad magic or version) or
/// TruncationError when the buffer ends inside the record.
HtmpRecord decode_record(std::span<const std::uint8_t> bytes, std::size_t offset = 0);

struct ManifestEntry {
  std::size_t record_index = 0;
  std::uint64_t file_offset = 0;
  std::size_t frame_index = 0;
  std::string sequence_id;

  bool operator==(const ManifestEntry&) const = default;
};

std::string manifest_to_csv(std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> manifest_from_csv(const std::string& text);

/// Appends records to an HTMP file and tracks the manifest.
class HtmpWriter {
 public:
  explicit HtmpWriter(const std::filesystem::path& path);

  void write(const HtmpRecord& record, std::size_t frame_index, const std::string& sequence_id);
  const std::vector<ManifestEntry>& manifest() const noexcept { return manifest_; }
  void close();

 private:
  std::ofstream out_;
  std::uint64_t offset_ = 0;
  std::vector<ManifestEntry> manifest_;
};

/// Random access to the records of an HTMP file through its manifest.
class HtmpReader {
 public:
  HtmpReader(const std::filesystem::path& htmp, const std::filesystem::path& manifest);

  std::size_t size() const noexcept { return manifest_.size(); }
  const std::vector<ManifestEntry>& manifest() const noexcept { return manifest_; }
  HtmpRecord read(std::size_t record_index);

 private:
  std::ifstream in_;
  std::uint64_t file_size_ = 0;
  std::vector<ManifestEntry> manifest_;
};

struct ExportOptions {
  std::size_t chirps_per_sample = kDefaultChirpsPerSample;
  std::size_t stride = 1;  // every stride-th frame
  std::size_t workers = 1;
  HeatmapParams heatmap;
};

struct SkippedFrame {
  std::string sequence_id;
  std::size_t frame_index = 0;
};

struct ExportSummary {
  std::size_t records = 0;
  std::vector<SkippedFrame> skipped;  // frames without ground truth
  std::filesystem::path htmp_path;
  std::filesystem::path manifest_path;
};

/// Writes `<out_dir>/heatmaps.htmp` and `<out_dir>/manifest.csv`. Frames without a label are skipped
/// and listed in the summary.
ExportSummary export_training_set(std::span<const std::unique_ptr<Sequence>> sequences,
                                  const std::filesystem::path& out_dir, const ExportOptions& options = {});

}  // namespace dronerad
