#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "dronerad/errors.hpp"
#include "dronerad/ingestion.hpp"
#include "dronerad/simulator.hpp"
#include "test_util.hpp"

using namespace dronerad;

namespace {

std::vector<DataCube> random_cubes(const RadarConfig& cfg, std::size_t n, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<DataCube> out;
  for (std::size_t i = 0; i < n; ++i) {
    DataCube c(cfg);
    for (auto& v : c.values().data()) {
      v = {g(rng), g(rng)};
    }
    out.push_back(std::move(c));
  }
  return out;
}

// Values exactly representable as float32, so the float32 encoding must reproduce them bit for bit.
std::vector<DataCube> float_exact(std::vector<DataCube> cubes) {
  for (auto& c : cubes) {
    for (auto& v : c.values().data()) {
      v = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
    }
  }
  return cubes;
}

std::uint16_t le16(const std::vector<std::uint8_t>& b, std::size_t o) { return static_cast<std::uint16_t>(b[o] | (b[o + 1] << 8)); }

}  // namespace

TEST(Rcub, HeaderLayoutIsBitExact) {
  RawCaptureHeader h;
  h.config_digest = 0x0102030405060708ULL;
  h.frame_count = 0x0A0B0C0D;
  h.encoding = SampleEncoding::int16_iq;
  const auto b = encode_header(h);
  ASSERT_EQ(b.size(), 20U);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "RCUB");
  EXPECT_EQ(le16(b, 4), 1);
  const std::vector<std::uint8_t> digest{8, 7, 6, 5, 4, 3, 2, 1};
  EXPECT_TRUE(std::equal(digest.begin(), digest.end(), b.begin() + 6));
  EXPECT_EQ(b[14], 0x0D);
  EXPECT_EQ(b[17], 0x0A);
  EXPECT_EQ(le16(b, 18), 0);
  const auto back = decode_header(b);
  EXPECT_EQ(back.config_digest, h.config_digest);
  EXPECT_EQ(back.frame_count, h.frame_count);
  EXPECT_EQ(back.encoding, h.encoding);
}

TEST(Rcub, FrameByteCounts) {
  const RadarConfig cfg;
  EXPECT_EQ(frame_bytes(cfg, SampleEncoding::int16_iq), 128U * 256U * 12U * 4U);
  EXPECT_EQ(frame_bytes(cfg, SampleEncoding::float32), 128U * 256U * 12U * 8U);
}

TEST(Rcub, Float32RoundTripBitExact) {
  const auto cfg = test::small_config();
  const auto cubes = float_exact(random_cubes(cfg, 3, 1));
  const auto bytes = serialize_capture(cubes, cfg, SampleEncoding::float32);
  EXPECT_EQ(bytes.size(), 20U + 3U * frame_bytes(cfg, SampleEncoding::float32));
  const auto back = parse_capture(bytes, cfg);
  ASSERT_EQ(back.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].values(), cubes[i].values());
    EXPECT_EQ(back[i].frame_index, i);
    EXPECT_DOUBLE_EQ(back[i].timestamp, i * cfg.frame_period);
  }
  // Sample order: chirp-major, then sample, then VA, each (I, Q) as f32.
  const std::size_t off = 20 + ((1 * cfg.samples_per_chirp + 2) * 12 + 3) * 8;
  float i_val = 0.0f, q_val = 0.0f;
  std::memcpy(&i_val, bytes.data() + off, 4);
  std::memcpy(&q_val, bytes.data() + off + 4, 4);
  EXPECT_EQ(i_val, static_cast<float>(cubes[0].at(1, 2, 3).real()));
  EXPECT_EQ(q_val, static_cast<float>(cubes[0].at(1, 2, 3).imag()));
}

TEST(Rcub, Int16QuantizationBound) {
  const auto cfg = test::small_config();
  const auto cubes = random_cubes(cfg, 2, 2);
  const auto bytes = serialize_capture(cubes, cfg, SampleEncoding::int16_iq);
  const auto back = parse_capture(bytes, cfg);
  double worst = 0.0;
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t i = 0; i < cubes[f].values().size(); ++i) {
      const auto a = cubes[f].values().data()[i];
      const auto b = back[f].values().data()[i];
      if (std::abs(a.real()) < 0.99 && std::abs(a.imag()) < 0.99) {
        worst = std::max({worst, std::abs(a.real() - b.real()), std::abs(a.imag() - b.imag())});
      }
    }
  }
  EXPECT_LE(worst, std::ldexp(1.0, -15));
  // Stored as round(x * 2^15): re-encoding the decoded frames is bit-exact.
  EXPECT_EQ(serialize_capture(back, cfg, SampleEncoding::int16_iq), bytes);
  // Out-of-range values saturate.
  DataCube big(cfg);
  big.at(0, 0, 0) = {5.0, -5.0};
  const auto sat = parse_capture(serialize_capture(std::vector{big}, cfg, SampleEncoding::int16_iq), cfg);
  EXPECT_DOUBLE_EQ(sat[0].at(0, 0, 0).real(), 32767.0 / 32768.0);
  EXPECT_DOUBLE_EQ(sat[0].at(0, 0, 0).imag(), -1.0);
}

TEST(Rcub, ErrorsCarryOffsets) {
  const auto cfg = test::small_config();
  const auto cubes = float_exact(random_cubes(cfg, 3, 3));
  const auto bytes = serialize_capture(cubes, cfg, SampleEncoding::float32);
  const std::size_t fb = frame_bytes(cfg, SampleEncoding::float32);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  try {
    parse_capture(bad_magic, cfg);
    FAIL();
  } catch (const TruncationError&) {
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0U);
  }

  auto bad_version = bytes;
  bad_version[4] = 9;
  try {
    parse_capture(bad_version, cfg);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4U);
  }

  auto bad_encoding = bytes;
  bad_encoding[18] = 7;
  try {
    parse_capture(bad_encoding, cfg);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 18U);
  }

  auto other = cfg;
  other.chirps_per_frame = 8;
  try {
    parse_capture(bytes, other);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 6U);
  }

  // Truncated mid-way through frame 2.
  const std::size_t cut = 20 + 2 * fb + fb / 3;
  const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<long>(cut));
  try {
    parse_capture(truncated, cfg);
    FAIL();
  } catch (const TruncationError& e) {
    EXPECT_EQ(e.frame_index(), 2U);
    EXPECT_EQ(e.expected_bytes(), bytes.size());
    EXPECT_EQ(e.actual_bytes(), cut);
    EXPECT_EQ(e.offset(), cut);
  }

  // Header itself cut short.
  try {
    parse_capture(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10), cfg);
    FAIL();
  } catch (const TruncationError& e) {
    EXPECT_EQ(e.offset(), 10U);
    EXPECT_EQ(e.expected_bytes(), 20U);
  }

  auto trailing = bytes;
  trailing.push_back(0);
  try {
    parse_capture(trailing, cfg);
    FAIL();
  } catch (const TruncationError&) {
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), bytes.size());
  }
}

TEST(Rcub, StreamingWriterAndReader) {
  const auto cfg = test::small_config();
  const auto cubes = float_exact(random_cubes(cfg, 4, 4));
  test::TempDir dir("rcub");
  const auto path = dir.path() / "c.rcube";
  {
    CaptureWriter w(path, cfg, SampleEncoding::float32);
    for (const auto& c : cubes) {
      w.write(c);
    }
    EXPECT_EQ(w.frames_written(), 4U);
    w.close();
  }
  std::ifstream in(path, std::ios::binary);
  const std::vector<std::uint8_t> file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(file, serialize_capture(cubes, cfg, SampleEncoding::float32));

  CaptureReader r(path, cfg);
  EXPECT_EQ(r.frame_count(), 4U);
  std::size_t n = 0;
  while (auto c = r.next()) {
    EXPECT_EQ(c->values(), cubes[n].values());
    EXPECT_EQ(c->frame_index, n);
    ++n;
  }
  EXPECT_EQ(n, 4U);
  r.seek(2);
  EXPECT_EQ(r.next()->values(), cubes[2].values());
  EXPECT_THROW(r.seek(5), ConfigError);

  CaptureWriter bad(dir.path() / "d.rcube", cfg, SampleEncoding::float32);
  EXPECT_THROW(bad.write(DataCube(RadarConfig{})), ConfigError);

  // A truncated file fails on open.
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  EXPECT_THROW(CaptureReader(path, cfg), TruncationError);
}

TEST(Timestamps, Extrapolation) {
  const auto t = extrapolate_timestamps(0.0, 0.1, 3);
  ASSERT_EQ(t.size(), 3U);
  EXPECT_EQ(t[0], 0.0);
  EXPECT_DOUBLE_EQ(t[1], 0.1);
  EXPECT_DOUBLE_EQ(t[2], 0.2);
  EXPECT_TRUE(extrapolate_timestamps(5.0, 0.1, 0).empty());
  EXPECT_NEAR(extrapolate_timestamps(100.05, 0.1, 600)[599], 159.95, 1e-9);
  EXPECT_THROW(extrapolate_timestamps(0.0, 0.0, 3), ConfigError);
}

TEST(Alignment, InterpolationAndDrops) {
  const std::vector<TimedPosition> gt{{1.0, {0, 0, 0}}, {2.0, {1, 1, 1}}, {3.0, {1, 3, 1}}};
  const std::vector<double> frames{0.5, 1.0, 1.5, 2.0, 2.25, 3.0, 3.5};
  const auto a = align_ground_truth(frames, gt);
  ASSERT_EQ(a.labels.size(), frames.size());
  EXPECT_EQ(a.dropped, 2U);
  EXPECT_FALSE(a.labels[0].has_value());
  EXPECT_EQ(*a.labels[1], (Vec3{0, 0, 0}));
  EXPECT_EQ(*a.labels[2], (Vec3{0.5, 0.5, 0.5}));
  EXPECT_EQ(*a.labels[3], (Vec3{1, 1, 1}));
  EXPECT_EQ(*a.labels[4], (Vec3{1, 1.5, 1}));
  EXPECT_EQ(*a.labels[5], (Vec3{1, 3, 1}));
  EXPECT_FALSE(a.labels[6].has_value());

  EXPECT_THROW(align_ground_truth(frames, std::vector<TimedPosition>{{1.0, {}}}), ConfigError);
  EXPECT_THROW(align_ground_truth(frames, std::vector<TimedPosition>{{2.0, {}}, {1.0, {}}}), ConfigError);
}

TEST(Alignment, MonotoneInterpolation) {
  std::vector<TimedPosition> gt;
  for (int i = 0; i <= 50; ++i) {
    gt.push_back({0.2 * i, {0.01 * i * i, 0.0, 0.0}});
  }
  const auto times = extrapolate_timestamps(0.03, 0.1, 95);
  const auto a = align_ground_truth(times, gt);
  EXPECT_EQ(a.dropped, 0U);
  for (std::size_t i = 1; i < times.size(); ++i) {
    EXPECT_GE(a.labels[i]->x, a.labels[i - 1]->x);
  }
}
