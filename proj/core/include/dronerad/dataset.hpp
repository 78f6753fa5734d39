#pragma once

// Sequences of frames with ground truth, either synthesized on demand or read from disk.
//
// On-disk dataset: one directory per sequence (seq_000, seq_001, ...) holding
//   config.txt    radar config (key = value)
//   gt.csv        header `frame_index,t,x,y,z`, one row per labelled frame
//   frames.rcube  RCUB capture

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dronerad/ingestion.hpp"
#include "dronerad/radar_model.hpp"
#include "dronerad/simulator.hpp"

namespace dronerad {

struct GroundTruthRow {
  std::size_t frame_index = 0;
  double t = 0.0;  // s
  Vec3 position;

  bool operator==(const GroundTruthRow&) const = default;
};

std::string ground_truth_to_csv(std::span<const GroundTruthRow> rows);
/// Throws ParseError (offset = start of the bad line) on a wrong header or malformed row.
std::vector<GroundTruthRow> ground_truth_from_csv(const std::string& text);
void write_ground_truth(const std::filesystem::path& path, std::span<const GroundTruthRow> rows);
std::vector<GroundTruthRow> read_ground_truth(const std::filesystem::path& path);

/// Random-access frame source with per-frame labels. frame() may be called from several threads.
class Sequence {
 public:
  virtual ~Sequence() = default;

  virtual const std::string& id() const = 0;
  virtual const RadarConfig& config() const = 0;
  virtual std::size_t frame_count() const = 0;
  virtual DataCube frame(std::size_t index) = 0;
  /// Label of a frame, empty when the frame has none.
  virtual std::optional<Vec3> truth(std::size_t index) const = 0;
  virtual std::vector<GroundTruthRow> ground_truth() const = 0;
};

/// Frames synthesized on demand from a scene; labels are the drone body position at frame time.
class SyntheticSequence final : public Sequence {
 public:
  SyntheticSequence(std::string id, Scene scene, const RadarConfig& cfg, double duration);

  const std::string& id() const override { return id_; }
  const RadarConfig& config() const override { return cfg_; }
  std::size_t frame_count() const override { return frames_; }
  DataCube frame(std::size_t index) override { return frame(index, nullptr); }
  DataCube frame(std::size_t index, SynthesisStats* stats) const;
  std::optional<Vec3> truth(std::size_t index) const override;
  std::vector<GroundTruthRow> ground_truth() const override;

  const Scene& scene() const noexcept { return scene_; }
  const VirtualArrayLayout& layout() const noexcept { return layout_; }

 private:
  std::string id_;
  Scene scene_;
  RadarConfig cfg_;
  VirtualArrayLayout layout_;
  std::size_t frames_;
};

/// A sequence directory on disk. The capture is validated when the sequence is opened.
class DiskSequence final : public Sequence {
 public:
  explicit DiskSequence(const std::filesystem::path& dir);

  const std::string& id() const override { return id_; }
  const RadarConfig& config() const override { return cfg_; }
  std::size_t frame_count() const override { return reader_.frame_count(); }
  DataCube frame(std::size_t index) override;
  std::optional<Vec3> truth(std::size_t index) const override;
  std::vector<GroundTruthRow> ground_truth() const override { return gt_; }

 private:
  std::string id_;
  RadarConfig cfg_;
  std::vector<GroundTruthRow> gt_;
  std::vector<std::optional<Vec3>> by_frame_;
  std::mutex mu_;
  CaptureReader reader_;
};

struct WriteSummary {
  std::size_t sequences = 0;
  std::size_t frames = 0;
  std::size_t max_scatterers = 0;  // per chirp, over all frames
  std::size_t dropped_scatterers = 0;
};

/// Writes one sequence directory. Frames are synthesized by `workers` producers and written in order.
WriteSummary write_sequence(const SyntheticSequence& seq, const std::filesystem::path& dir, SampleEncoding encoding,
                            std::size_t workers);

std::string sequence_dir_name(std::size_t index);
/// Sequence directories under `root`, sorted by name. Throws Error when there are none.
std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& root);

/// The benchmark's sequences, synthesized in memory.
std::vector<std::unique_ptr<Sequence>> bench_sequences(const BenchSpec& spec, const RadarConfig& cfg);
/// Opens every sequence under `root`; a directory that is itself a sequence is also accepted.
std::vector<std::unique_ptr<Sequence>> open_dataset(const std::filesystem::path& root);

}  // namespace dronerad
