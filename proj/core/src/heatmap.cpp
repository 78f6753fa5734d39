#include "dronerad/heatmap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bytes.hpp"
#include "dronerad/errors.hpp"
#include "dronerad/parallel.hpp"
#include "dronerad/pipelines.hpp"

namespace dronerad {
namespace {

using detail::get_le;
using detail::put_le;

constexpr std::array<std::uint8_t, 4> kMagic{'H', 'T', 'M', 'P'};
constexpr const char* kManifestHeader = "record_index,file_offset,frame_index,sequence_id";

// Offsets of each element along the angle axis, relative to the first element of its group.
template <std::size_t N>
std::array<std::size_t, N> relative_x(const VirtualArrayLayout& layout, const std::array<std::size_t, N>& vas) {
  std::array<std::size_t, N> out{};
  int lo = layout.positions[vas[0]].x;
  for (auto v : vas) {
    lo = std::min(lo, layout.positions[v].x);
  }
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = static_cast<std::size_t>(layout.positions[vas[i]].x - lo);
  }
  return out;
}

void normalize_into(const std::vector<double>& mag, Matrix<float>& out) {
  const double peak = *std::max_element(mag.begin(), mag.end());
  auto o = out.data();
  if (!(peak > 0.0)) {
    std::fill(o.begin(), o.end(), 0.0F);
    return;
  }
  const double inv = 1.0 / peak;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    o[i] = static_cast<float>(std::min(mag[i] * inv, 1.0));
  }
}

// Angle spectra of the range profile [bin][VA]; bins are centred as in angle_spectrum.
ChirpHeatmaps heatmaps_from_profile(const Matrix<cdouble>& profile, const VirtualArrayLayout& layout,
                                    const HeatmapParams& params) {
  const std::size_t nr = profile.rows();
  const std::size_t na = params.angle_fft;
  std::size_t span = 0;
  for (const auto& p : layout.positions) {
    span = std::max(span, static_cast<std::size_t>(std::max(p.x, 0)) + 1);
  }
  Matrix<cdouble> tw(na, std::max<std::size_t>(span, 2));
  for (std::size_t k = 0; k < na; ++k) {
    for (std::size_t n = 0; n < tw.cols(); ++n) {
      tw(k, n) = std::polar(1.0, -angle_bin_to_omega(k, na) * static_cast<double>(n));
    }
  }

  ChirpHeatmaps h;
  std::vector<double> mag(nr * na);
  for (std::size_t i = 0; i < kAzimuthMaps; ++i) {
    const auto& row = layout.azimuth_rows[i];
    const auto rel = relative_x(layout, row);
    for (std::size_t r = 0; r < nr; ++r) {
      std::array<cdouble, 4> x;
      for (std::size_t e = 0; e < 4; ++e) {
        x[e] = profile(r, row[e]);
      }
      for (std::size_t k = 0; k < na; ++k) {
        cdouble acc{};
        for (std::size_t e = 0; e < 4; ++e) {
          acc += x[e] * tw(k, rel[e]);
        }
        mag[r * na + k] = std::sqrt(std::norm(acc));
      }
    }
    h.azimuth_maps[i] = Matrix<float>(nr, na);
    normalize_into(mag, h.azimuth_maps[i]);
  }
  for (std::size_t j = 0; j < kElevationMaps; ++j) {
    const auto [lo, hi] = layout.elevation_pairs[j];
    for (std::size_t r = 0; r < nr; ++r) {
      const cdouble a = profile(r, lo);
      const cdouble b = profile(r, hi);
      for (std::size_t k = 0; k < na; ++k) {
        mag[r * na + k] = std::sqrt(std::norm(a + b * tw(k, 1)));
      }
    }
    h.elevation_maps[j] = Matrix<float>(nr, na);
    normalize_into(mag, h.elevation_maps[j]);
  }
  return h;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint16_t checked_u16(std::size_t v, const char* what) {
  if (v == 0 || v > 0xFFFF) {
    throw ConfigError(std::string("HTMP ") + what + " must be in [1, 65535]");
  }
  return static_cast<std::uint16_t>(v);
}

}  // namespace

std::vector<ChirpHeatmaps> frame_heatmaps(const DataCube& cube, const RadarConfig& cfg,
                                          const VirtualArrayLayout& layout, std::span<const std::size_t> chirps,
                                          const HeatmapParams& params) {
  if (!cube.matches(cfg)) {
    throw ConfigError("cube shape does not match the radar config");
  }
  if (cube.chirps() < 2) {
    throw ConfigError("clutter removal needs at least 2 chirps");
  }
  if (params.range_fft < cube.samples() || params.angle_fft < 8) {
    throw ConfigError("heatmap FFT sizes too small for the frame");
  }
  const std::size_t plane = cube.samples() * cube.antennas();
  std::vector<cdouble> mean(plane);
  for (std::size_t c = 0; c < cube.chirps(); ++c) {
    const auto s = cube.values().slab(c);
    for (std::size_t j = 0; j < plane; ++j) {
      mean[j] += s[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(cube.chirps());
  for (auto& m : mean) {
    m *= inv;
  }

  std::vector<ChirpHeatmaps> out;
  out.reserve(chirps.size());
  Matrix<cdouble> chirp(cube.samples(), cube.antennas());
  for (std::size_t c : chirps) {
    if (c >= cube.chirps()) {
      throw ConfigError("chirp index out of range");
    }
    const auto s = cube.values().slab(c);
    auto d = chirp.data();
    for (std::size_t j = 0; j < plane; ++j) {
      d[j] = s[j] - mean[j];
    }
    out.push_back(heatmaps_from_profile(chirp_range_fft(chirp, params.range_fft), layout, params));
    out.back().chirp_index = c;
    out.back().frame_index = cube.frame_index;
  }
  return out;
}

ChirpHeatmaps chirp_heatmaps(const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                             std::size_t chirp_index, const HeatmapParams& params) {
  const std::array<std::size_t, 1> one{chirp_index};
  return std::move(frame_heatmaps(cube, cfg, layout, one, params).front());
}

std::vector<std::size_t> select_chirps(std::size_t n_chirps, std::size_t per_sample) {
  if (per_sample == 0 || per_sample > n_chirps) {
    throw ConfigError("chirps per sample must be in [1, chirps per frame]");
  }
  std::vector<std::size_t> out(per_sample);
  for (std::size_t k = 0; k < per_sample; ++k) {
    out[k] = k * n_chirps / per_sample;
  }
  return out;
}

std::size_t htmp_record_bytes(std::size_t n_maps, std::size_t rows, std::size_t cols, std::size_t chirps) {
  return kHtmpHeaderBytes + 4 * n_maps * rows * cols * chirps + 3 * 8;
}

HtmpRecord to_record(const TrainingSample& sample) {
  if (sample.heatmaps.empty()) {
    throw ConfigError("training sample has no chirps");
  }
  HtmpRecord rec;
  const auto& first = sample.heatmaps.front().map(0);
  rec.n_maps = checked_u16(kMapsPerChirp, "map count");
  rec.rows = checked_u16(first.rows(), "rows");
  rec.cols = checked_u16(first.cols(), "cols");
  rec.chirps = checked_u16(sample.heatmaps.size(), "chirp count");
  const std::size_t plane = first.size();
  rec.data.resize(kMapsPerChirp * plane * sample.heatmaps.size());
  auto* dst = rec.data.data();
  for (const auto& h : sample.heatmaps) {
    for (std::size_t m = 0; m < kMapsPerChirp; ++m) {
      const auto src = h.map(m).data();
      if (src.size() != plane) {
        throw ConfigError("heatmaps of one sample must share dimensions");
      }
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  rec.label = {sample.label.x, sample.label.y, sample.label.z};
  return rec;
}

std::vector<std::uint8_t> encode_record(const HtmpRecord& r) {
  const std::size_t n = static_cast<std::size_t>(r.n_maps) * r.rows * r.cols * r.chirps;
  if (r.data.size() != n) {
    throw ConfigError("HTMP record data size does not match its dimensions");
  }
  std::vector<std::uint8_t> out;
  out.reserve(htmp_record_bytes(r.n_maps, r.rows, r.cols, r.chirps));
  for (auto b : kMagic) {
    out.push_back(b);
  }
  put_le<std::uint16_t>(out, kHtmpVersion);
  put_le<std::uint16_t>(out, r.n_maps);
  put_le<std::uint16_t>(out, r.rows);
  put_le<std::uint16_t>(out, r.cols);
  put_le<std::uint16_t>(out, r.chirps);
  for (float v : r.data) {
    detail::put_f32(out, v);
  }
  for (double v : r.label) {
    detail::put_f64(out, v);
  }
  return out;
}

HtmpRecord decode_record(std::span<const std::uint8_t> bytes, std::size_t offset) {
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (offset + i >= bytes.size() || bytes[offset + i] != kMagic[i]) {
      throw ParseError("bad magic: not an HTMP record", offset);
    }
  }
  if (bytes.size() < offset + kHtmpHeaderBytes) {
    throw TruncationError("HTMP header truncated", 0, offset + kHtmpHeaderBytes, bytes.size());
  }
  const std::uint8_t* p = bytes.data() + offset;
  if (get_le<std::uint16_t>(p + 4) != kHtmpVersion) {
    throw ParseError("unsupported HTMP version", offset + 4);
  }
  HtmpRecord r;
  r.n_maps = get_le<std::uint16_t>(p + 6);
  r.rows = get_le<std::uint16_t>(p + 8);
  r.cols = get_le<std::uint16_t>(p + 10);
  r.chirps = get_le<std::uint16_t>(p + 12);
  const std::size_t size = htmp_record_bytes(r.n_maps, r.rows, r.cols, r.chirps);
  if (bytes.size() < offset + size) {
    throw TruncationError("HTMP record truncated", 0, offset + size, bytes.size());
  }
  const std::size_t n = static_cast<std::size_t>(r.n_maps) * r.rows * r.cols * r.chirps;
  r.data.resize(n);
  p += kHtmpHeaderBytes;
  for (std::size_t i = 0; i < n; ++i, p += 4) {
    r.data[i] = detail::get_f32(p);
  }
  for (auto& v : r.label) {
    v = detail::get_f64(p);
    p += 8;
  }
  return r;
}

std::string manifest_to_csv(std::span<const ManifestEntry> entries) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& e : entries) {
    out += std::to_string(e.record_index) + "," + std::to_string(e.file_offset) + "," +
           std::to_string(e.frame_index) + "," + e.sequence_id + "\n";
  }
  return out;
}

std::vector<ManifestEntry> manifest_from_csv(const std::string& text) {
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line;
  std::size_t pos = 0;
  bool header = true;
  auto num = [](std::string_view s, auto& v) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && p == s.data() + s.size();
  };
  while (std::getline(in, line)) {
    const std::size_t line_start = pos;
    pos += line.size() + 1;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (header) {
      if (line != kManifestHeader) {
        throw ParseError("manifest header must be '" + std::string(kManifestHeader) + "'", line_start);
      }
      header = false;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const std::string_view v(line);
    const auto c1 = v.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : v.find(',', c1 + 1);
    const auto c3 = c2 == std::string_view::npos ? c2 : v.find(',', c2 + 1);
    ManifestEntry e;
    if (c3 == std::string_view::npos || !num(v.substr(0, c1), e.record_index) ||
        !num(v.substr(c1 + 1, c2 - c1 - 1), e.file_offset) || !num(v.substr(c2 + 1, c3 - c2 - 1), e.frame_index)) {
      throw ParseError("malformed manifest row '" + line + "'", line_start);
    }
    e.sequence_id = std::string(v.substr(c3 + 1));
    out.push_back(std::move(e));
  }
  if (header) {
    throw ParseError("manifest is empty", 0);
  }
  return out;
}

HtmpWriter::HtmpWriter(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) {
    throw Error("cannot open " + path.string() + " for writing");
  }
}

void HtmpWriter::write(const HtmpRecord& record, std::size_t frame_index, const std::string& sequence_id) {
  const auto bytes = encode_record(record);
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out_) {
    throw Error("failed writing HTMP record");
  }
  manifest_.push_back({manifest_.size(), offset_, frame_index, sequence_id});
  offset_ += bytes.size();
}

void HtmpWriter::close() {
  out_.close();
  if (!out_) {
    throw Error("failed closing HTMP file");
  }
}

HtmpReader::HtmpReader(const std::filesystem::path& htmp, const std::filesystem::path& manifest)
    : in_(htmp, std::ios::binary), file_size_(std::filesystem::file_size(htmp)),
      manifest_(manifest_from_csv(read_text(manifest))) {
  if (!in_) {
    throw Error("cannot open " + htmp.string());
  }
}

HtmpRecord HtmpReader::read(std::size_t record_index) {
  if (record_index >= manifest_.size()) {
    throw ConfigError("record index out of range");
  }
  const std::uint64_t offset = manifest_[record_index].file_offset;
  if (offset + kHtmpHeaderBytes > file_size_) {
    throw TruncationError("HTMP header truncated", record_index, offset + kHtmpHeaderBytes, file_size_);
  }
  std::vector<std::uint8_t> buf(kHtmpHeaderBytes);
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(offset));
  in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  const std::size_t size = htmp_record_bytes(get_le<std::uint16_t>(buf.data() + 6), get_le<std::uint16_t>(buf.data() + 8),
                                             get_le<std::uint16_t>(buf.data() + 10),
                                             get_le<std::uint16_t>(buf.data() + 12));
  if (offset + size > file_size_) {
    throw TruncationError("HTMP record " + std::to_string(record_index) + " truncated", record_index, offset + size,
                          file_size_);
  }
  buf.resize(size);
  in_.read(reinterpret_cast<char*>(buf.data() + kHtmpHeaderBytes), static_cast<std::streamsize>(size - kHtmpHeaderBytes));
  if (!in_) {
    throw Error("failed reading HTMP record " + std::to_string(record_index));
  }
  try {
    return decode_record(buf);
  } catch (const TruncationError&) {
    throw;
  } catch (const ParseError& e) {
    throw ParseError(std::string("HTMP record ") + std::to_string(record_index) + ": " + e.what(), offset + e.offset());
  }
}

ExportSummary export_training_set(std::span<const std::unique_ptr<Sequence>> sequences,
                                  const std::filesystem::path& out_dir, const ExportOptions& options) {
  if (options.stride == 0) {
    throw ConfigError("export stride must be at least 1");
  }
  std::filesystem::create_directories(out_dir);
  ExportSummary summary;
  summary.htmp_path = out_dir / "heatmaps.htmp";
  summary.manifest_path = out_dir / "manifest.csv";
  HtmpWriter writer(summary.htmp_path);

  for (const auto& seq : sequences) {
    const auto& cfg = seq->config();
    const auto layout = VirtualArrayLayout::standard(cfg);
    const auto chirps = select_chirps(cfg.chirps_per_frame, options.chirps_per_sample);
    std::vector<std::size_t> frames;
    for (std::size_t f = 0; f < seq->frame_count(); f += options.stride) {
      if (seq->truth(f)) {
        frames.push_back(f);
      } else {
        summary.skipped.push_back({seq->id(), f});
      }
    }
    // Producers compute a batch of records in parallel; the writer keeps frame order.
    const std::size_t batch = std::max<std::size_t>(options.workers, 1) * 2;
    std::vector<HtmpRecord> records(batch);
    for (std::size_t first = 0; first < frames.size(); first += batch) {
      const std::size_t n = std::min(batch, frames.size() - first);
      parallel_for(n, options.workers, [&](std::size_t i) {
        const std::size_t f = frames[first + i];
        TrainingSample sample{frame_heatmaps(seq->frame(f), cfg, layout, chirps, options.heatmap), *seq->truth(f)};
        records[i] = to_record(sample);
      });
      for (std::size_t i = 0; i < n; ++i) {
        writer.write(records[i], frames[first + i], seq->id());
      }
    }
  }
  writer.close();
  summary.records = writer.manifest().size();
  std::ofstream m(summary.manifest_path, std::ios::binary);
  m << manifest_to_csv(writer.manifest());
  if (!m) {
    throw Error("failed writing " + summary.manifest_path.string());
  }
  return summary;
}

}  // namespace dronerad
