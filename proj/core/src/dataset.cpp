#include "dronerad/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dronerad/errors.hpp"
#include "dronerad/parallel.hpp"

namespace dronerad {
namespace {

constexpr const char* kGtHeader = "frame_index,t,x,y,z";

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

std::string ground_truth_to_csv(std::span<const GroundTruthRow> rows) {
  std::string out = std::string(kGtHeader) + "\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.frame_index, r.t, r.position.x,
                  r.position.y, r.position.z);
    out += buf;
  }
  return out;
}

std::vector<GroundTruthRow> ground_truth_from_csv(const std::string& text) {
  std::vector<GroundTruthRow> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) {
      end = text.size();
    }
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (header) {
      if (line != kGtHeader) {
        throw ParseError("gt.csv header must be '" + std::string(kGtHeader) + "'", pos);
      }
      header = false;
    } else if (!line.empty()) {
      const auto f = split(line, ',');
      GroundTruthRow r;
      if (f.size() != 5 || !parse_field(f[0], r.frame_index) || !parse_field(f[1], r.t) ||
          !parse_field(f[2], r.position.x) || !parse_field(f[3], r.position.y) || !parse_field(f[4], r.position.z)) {
        throw ParseError("malformed gt.csv row '" + std::string(line) + "'", pos);
      }
      rows.push_back(r);
    }
    pos = end + 1;
  }
  if (header) {
    throw ParseError("gt.csv is empty", 0);
  }
  return rows;
}

void write_ground_truth(const std::filesystem::path& path, std::span<const GroundTruthRow> rows) {
  std::ofstream out(path, std::ios::binary);
  out << ground_truth_to_csv(rows);
  if (!out) {
    throw Error("failed writing " + path.string());
  }
}

std::vector<GroundTruthRow> read_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_csv(read_text(path));
}

SyntheticSequence::SyntheticSequence(std::string id, Scene scene, const RadarConfig& cfg, double duration)
    : id_(std::move(id)),
      scene_(std::move(scene)),
      cfg_(cfg),
      layout_(VirtualArrayLayout::standard(cfg)),
      frames_(dronerad::frame_count(duration, cfg)) {
  cfg_.validate();
  scene_.validate();
}

DataCube SyntheticSequence::frame(std::size_t index, SynthesisStats* stats) const {
  if (index >= frames_) {
    throw ConfigError("frame index out of range");
  }
  return synthesize_frame(scene_, cfg_, layout_, index, stats);
}

std::optional<Vec3> SyntheticSequence::truth(std::size_t index) const {
  if (index >= frames_) {
    return std::nullopt;
  }
  return scene_.trajectory.pose_at(static_cast<double>(index) * cfg_.frame_period).position;
}

std::vector<GroundTruthRow> SyntheticSequence::ground_truth() const {
  std::vector<GroundTruthRow> rows(frames_);
  for (std::size_t i = 0; i < frames_; ++i) {
    rows[i] = {i, static_cast<double>(i) * cfg_.frame_period, *truth(i)};
  }
  return rows;
}

DiskSequence::DiskSequence(const std::filesystem::path& dir)
    : id_(dir.filename().string()),
      cfg_(read_config(dir / "config.txt")),
      gt_(read_ground_truth(dir / "gt.csv")),
      reader_(dir / "frames.rcube", cfg_) {
  if (id_.empty()) {
    id_ = dir.parent_path().filename().string();
  }
  by_frame_.resize(reader_.frame_count());
  for (const auto& r : gt_) {
    if (r.frame_index < by_frame_.size()) {
      by_frame_[r.frame_index] = r.position;
    }
  }
}

DataCube DiskSequence::frame(std::size_t index) {
  if (index >= frame_count()) {
    throw ConfigError("frame index out of range");
  }
  std::lock_guard lock(mu_);
  reader_.seek(index);
  return *reader_.next();
}

std::optional<Vec3> DiskSequence::truth(std::size_t index) const {
  return index < by_frame_.size() ? by_frame_[index] : std::nullopt;
}

WriteSummary write_sequence(const SyntheticSequence& seq, const std::filesystem::path& dir, SampleEncoding encoding,
                            std::size_t workers) {
  std::filesystem::create_directories(dir);
  write_config(seq.config(), dir / "config.txt");
  const auto gt = seq.ground_truth();
  write_ground_truth(dir / "gt.csv", gt);

  WriteSummary summary;
  summary.sequences = 1;
  CaptureWriter writer(dir / "frames.rcube", seq.config(), encoding);
  const std::size_t batch = std::max<std::size_t>(workers, 1) * 2;
  std::vector<DataCube> cubes(batch);
  std::vector<SynthesisStats> stats(batch);
  for (std::size_t first = 0; first < seq.frame_count(); first += batch) {
    const std::size_t n = std::min(batch, seq.frame_count() - first);
    parallel_for(n, workers, [&](std::size_t i) {
      stats[i] = {};
      cubes[i] = seq.frame(first + i, &stats[i]);
    });
    for (std::size_t i = 0; i < n; ++i) {
      writer.write(cubes[i]);
      summary.max_scatterers = std::max(summary.max_scatterers, stats[i].scatterers);
      summary.dropped_scatterers += stats[i].dropped;
    }
    summary.frames += n;
  }
  writer.close();
  return summary;
}

std::string sequence_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%03zu", index);
  return buf;
}

std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  if (std::filesystem::is_directory(root)) {
    for (const auto& e : std::filesystem::directory_iterator(root)) {
      if (e.is_directory() && std::filesystem::exists(e.path() / "frames.rcube")) {
        out.push_back(e.path());
      }
    }
  }
  if (out.empty()) {
    throw Error("no sequence directories under " + root.string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::unique_ptr<Sequence>> bench_sequences(const BenchSpec& spec, const RadarConfig& cfg) {
  std::vector<std::unique_ptr<Sequence>> out;
  for (std::size_t i = 0; i < spec.sequences; ++i) {
    out.push_back(std::make_unique<SyntheticSequence>(sequence_dir_name(i), bench_scene(spec, i, cfg), cfg,
                                                      spec.duration));
  }
  return out;
}

std::vector<std::unique_ptr<Sequence>> open_dataset(const std::filesystem::path& root) {
  std::vector<std::unique_ptr<Sequence>> out;
  if (std::filesystem::exists(root / "frames.rcube")) {
    out.push_back(std::make_unique<DiskSequence>(root));
    return out;
  }
  for (const auto& dir : list_sequences(root)) {
    out.push_back(std::make_unique<DiskSequence>(dir));
  }
  return out;
}

}  // namespace dronerad
