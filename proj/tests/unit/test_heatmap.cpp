#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "dronerad/dataset.hpp"
#include "dronerad/errors.hpp"
#include "dronerad/heatmap.hpp"
#include "dronerad/pipelines.hpp"
#include "dronerad/simulator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dronerad;

namespace {

std::pair<std::size_t, std::size_t> argmax(const Matrix<float>& m) {
  std::size_t best = 0;
  const auto d = m.data();
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] > d[best]) {
      best = i;
    }
  }
  return {best / m.cols(), best % m.cols()};
}

DataCube boresight_cube(const RadarConfig& cfg, double range) {
  const auto layout = VirtualArrayLayout::standard(cfg);
  const std::vector<PointScatterer> pts{{{0.0, range, 0.0}, {0.0, 0.5, 0.0}, 1.0}};
  return synthesize_points(pts, cfg, layout);
}

HtmpRecord small_record(float base, std::size_t chirps) {
  HtmpRecord r;
  r.n_maps = 6;
  r.rows = 3;
  r.cols = 5;
  r.chirps = static_cast<std::uint16_t>(chirps);
  r.data.resize(6 * 3 * 5 * chirps);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    r.data[i] = base + static_cast<float>(i) * 0.001F;
  }
  r.label = {0.25, 2.5, -1.0 / 3.0};
  return r;
}

}  // namespace

TEST(SelectChirps, UniformSubsample) {
  const std::vector<std::size_t> want{0, 8, 16, 24, 32, 40, 48, 56, 64, 72, 80, 88, 96, 104, 112, 120};
  EXPECT_EQ(select_chirps(128, 16), want);
  EXPECT_EQ(select_chirps(10, 3), (std::vector<std::size_t>{0, 3, 6}));
  EXPECT_EQ(select_chirps(4, 4), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(select_chirps(16, 0), ConfigError);
  EXPECT_THROW(select_chirps(16, 17), ConfigError);
}

TEST(Heatmaps, BoresightTargetShape) {
  RadarConfig cfg;
  const auto layout = VirtualArrayLayout::standard(cfg);
  const double range = 2.0;
  const auto cube = boresight_cube(cfg, range);
  const auto chirps = select_chirps(cfg.chirps_per_frame, 16);
  const auto maps = frame_heatmaps(cube, cfg, layout, chirps);
  ASSERT_EQ(maps.size(), 16U);
  const double cell = range_bin_to_m(1, kDefaultRangeFft, cfg);
  for (std::size_t c = 0; c < maps.size(); ++c) {
    EXPECT_EQ(maps[c].chirp_index, chirps[c]);
    for (std::size_t m = 0; m < kMapsPerChirp; ++m) {
      const auto& map = maps[c].map(m);
      ASSERT_EQ(map.rows(), kDefaultRangeFft);
      ASSERT_EQ(map.cols(), kDefaultAngleFft);
      const auto [r, k] = argmax(map);
      EXPECT_NEAR(r * cell, range, cell) << "chirp " << c << " map " << m;
      EXPECT_EQ(k, 90U) << "chirp " << c << " map " << m;
      EXPECT_FLOAT_EQ(*std::max_element(map.data().begin(), map.data().end()), 1.0F);
      EXPECT_GE(*std::min_element(map.data().begin(), map.data().end()), 0.0F);
    }
  }
}

TEST(Heatmaps, SingleChirpMatchesFrameCall) {
  RadarConfig cfg;
  const auto layout = VirtualArrayLayout::standard(cfg);
  const auto cube = boresight_cube(cfg, 3.1);
  const std::array<std::size_t, 2> chirps{5, 77};
  const auto both = frame_heatmaps(cube, cfg, layout, chirps);
  const auto one = chirp_heatmaps(cube, cfg, layout, 77);
  for (std::size_t m = 0; m < kMapsPerChirp; ++m) {
    EXPECT_EQ(one.map(m), both[1].map(m));
  }
}

TEST(Heatmaps, RangeBinAgreesWithFft2dMaps) {
  RadarConfig cfg;
  const auto layout = VirtualArrayLayout::standard(cfg);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = oracle::closure_target(rng);
    const std::vector<PointScatterer> pts{t.scatterer};
    const auto cube = synthesize_points(pts, cfg, layout);
    FftParams fp;
    fp.chirp = 40;
    const auto ref = fft_2d_maps(cube, layout, fp);
    std::size_t best = 0;
    for (std::size_t i = 1; i < ref.azimuth.size(); ++i) {
      if (ref.azimuth.data()[i] > ref.azimuth.data()[best]) {
        best = i;
      }
    }
    const auto h = chirp_heatmaps(cube, cfg, layout, 40);
    // Range profile per VA is shared; the 4-element row peaks in the same range bin.
    EXPECT_EQ(argmax(h.azimuth_maps[0]).first, best / ref.azimuth.cols()) << trial;
  }
}

TEST(Heatmaps, ZeroCubeAndErrors) {
  RadarConfig cfg;
  const auto layout = VirtualArrayLayout::standard(cfg);
  const DataCube zero(cfg);
  const auto h = chirp_heatmaps(zero, cfg, layout, 0);
  for (std::size_t m = 0; m < kMapsPerChirp; ++m) {
    const auto d = h.map(m).data();
    EXPECT_TRUE(std::all_of(d.begin(), d.end(), [](float v) { return v == 0.0F; }));
  }
  EXPECT_THROW(chirp_heatmaps(zero, cfg, layout, cfg.chirps_per_frame), ConfigError);
  HeatmapParams small;
  small.range_fft = 128;
  EXPECT_THROW(chirp_heatmaps(zero, cfg, layout, 0, small), ConfigError);
  auto other = cfg;
  other.chirps_per_frame = 64;
  EXPECT_THROW(chirp_heatmaps(zero, other, layout, 0), ConfigError);
}

TEST(Htmp, RecordRoundTripBitExact) {
  const auto rec = small_record(-0.5F, 2);
  const auto bytes = encode_record(rec);
  ASSERT_EQ(bytes.size(), htmp_record_bytes(6, 3, 5, 2));
  ASSERT_EQ(bytes.size(), 14U + 4U * 180U + 24U);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HTMP");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 6);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[10], 5);
  EXPECT_EQ(bytes[12], 2);
  EXPECT_EQ(decode_record(bytes), rec);
  EXPECT_FLOAT_EQ(rec.at(1, 2, 1, 3), rec.data[((1 * 6 + 2) * 3 + 1) * 5 + 3]);

  // Records back to back, decoded at their offsets.
  auto two = bytes;
  const auto second = small_record(7.0F, 1);
  const auto b2 = encode_record(second);
  two.insert(two.end(), b2.begin(), b2.end());
  EXPECT_EQ(decode_record(two, bytes.size()), second);
}

TEST(Htmp, DecodeErrorsCarryOffsets) {
  const auto bytes = encode_record(small_record(0.0F, 1));
  auto bad = bytes;
  bad[1] = 'X';
  try {
    decode_record(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0U);
  }
  bad = bytes;
  bad[4] = 2;
  try {
    decode_record(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4U);
  }
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 3);
  try {
    decode_record(cut);
    FAIL();
  } catch (const TruncationError& e) {
    EXPECT_EQ(e.expected_bytes(), bytes.size());
    EXPECT_EQ(e.actual_bytes(), cut.size());
  }
  const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + 9);
  try {
    decode_record(head);
    FAIL();
  } catch (const TruncationError& e) {
    EXPECT_EQ(e.expected_bytes(), kHtmpHeaderBytes);
    EXPECT_EQ(e.actual_bytes(), 9U);
  }
  auto short_data = small_record(0.0F, 1);
  short_data.data.pop_back();
  EXPECT_THROW(encode_record(short_data), ConfigError);
}

TEST(Htmp, ManifestCsv) {
  const std::vector<ManifestEntry> entries{{0, 0, 3, "seq_000"}, {1, 4096, 7, "seq_001"}};
  const auto text = manifest_to_csv(entries);
  EXPECT_EQ(text, "record_index,file_offset,frame_index,sequence_id\n0,0,3,seq_000\n1,4096,7,seq_001\n");
  EXPECT_EQ(manifest_from_csv(text), entries);
  EXPECT_THROW(manifest_from_csv("a,b,c,d\n"), ParseError);
  const std::string bad = "record_index,file_offset,frame_index,sequence_id\n0,x,3,s\n";
  try {
    manifest_from_csv(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), bad.find("0,x"));
  }
}

TEST(Htmp, WriterReaderFiles) {
  test::TempDir dir("htmp");
  const auto path = dir.path() / "h.htmp";
  const std::vector<HtmpRecord> recs{small_record(0.0F, 1), small_record(1.0F, 3), small_record(2.0F, 2)};
  {
    HtmpWriter w(path);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      w.write(recs[i], 10 + i, "s");
    }
    EXPECT_EQ(w.manifest()[1].file_offset, htmp_record_bytes(6, 3, 5, 1));
    w.close();
    std::ofstream m(dir.path() / "m.csv", std::ios::binary);
    m << manifest_to_csv(w.manifest());
  }
  HtmpReader r(path, dir.path() / "m.csv");
  ASSERT_EQ(r.size(), 3U);
  EXPECT_EQ(r.read(2), recs[2]);
  EXPECT_EQ(r.read(0), recs[0]);
  EXPECT_EQ(r.manifest()[2].frame_index, 12U);
  EXPECT_THROW(r.read(3), ConfigError);

  // Cut the file inside the last record.
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 10);
  HtmpReader cut(path, dir.path() / "m.csv");
  EXPECT_EQ(cut.read(1), recs[1]);
  try {
    cut.read(2);
    FAIL();
  } catch (const TruncationError& e) {
    EXPECT_EQ(e.frame_index(), 2U);
    EXPECT_EQ(e.expected_bytes(), std::filesystem::file_size(path) + 10);
  }
}

TEST(Htmp, ExportTrainingSet) {
  const auto cfg = test::small_config();
  BenchSpec spec;
  spec.duration = 0.4;
  std::vector<std::unique_ptr<Sequence>> seqs;
  seqs.push_back(std::make_unique<SyntheticSequence>("a", bench_scene(spec, 0, cfg), cfg, 0.4));
  seqs.push_back(std::make_unique<SyntheticSequence>("b", bench_scene(spec, 1, cfg), cfg, 0.4));
  test::TempDir dir("export");
  ExportOptions opt;
  opt.chirps_per_sample = 4;
  opt.workers = 2;
  const auto summary = export_training_set(seqs, dir.path(), opt);
  EXPECT_EQ(summary.records, 8U);
  EXPECT_TRUE(summary.skipped.empty());
  HtmpReader r(summary.htmp_path, summary.manifest_path);
  ASSERT_EQ(r.size(), 8U);
  EXPECT_EQ(r.manifest()[5].sequence_id, "b");
  EXPECT_EQ(r.manifest()[5].frame_index, 1U);
  const auto rec = r.read(5);
  EXPECT_EQ(rec.n_maps, 6);
  EXPECT_EQ(rec.rows, 256);
  EXPECT_EQ(rec.cols, 180);
  EXPECT_EQ(rec.chirps, 4);
  const auto truth = *seqs[1]->truth(1);
  EXPECT_EQ(rec.label, (std::array<double, 3>{truth.x, truth.y, truth.z}));
  // Same content as computing the heatmaps directly.
  const auto layout = VirtualArrayLayout::standard(cfg);
  const auto chirps = select_chirps(cfg.chirps_per_frame, 4);
  const auto direct = to_record({frame_heatmaps(seqs[1]->frame(1), cfg, layout, chirps), truth});
  EXPECT_EQ(rec, direct);

  opt.stride = 3;
  const auto strided = export_training_set(seqs, dir.path() / "s", opt);
  EXPECT_EQ(strided.records, 4U);
  opt.stride = 0;
  EXPECT_THROW(export_training_set(seqs, dir.path() / "z", opt), ConfigError);
}
