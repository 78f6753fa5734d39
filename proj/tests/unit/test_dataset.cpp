#include <gtest/gtest.h>

#include <fstream>

#include "dronerad/dataset.hpp"
#include "dronerad/errors.hpp"
#include "dronerad/ingestion.hpp"
#include "test_util.hpp"

using namespace dronerad;

namespace {

SyntheticSequence short_sequence(const std::string& id, double duration, std::uint64_t seed) {
  const auto cfg = test::small_config();
  BenchSpec spec;
  spec.duration = duration;
  spec.first_seed = seed;
  return SyntheticSequence(id, bench_scene(spec, 0, cfg), cfg, duration);
}

}  // namespace

TEST(GroundTruthCsv, RoundTripAndErrors) {
  const std::vector<GroundTruthRow> rows{{0, 0.0, {0.1, 2.0, -0.3}}, {1, 0.1, {1.0 / 3.0, 2.5e-17, 1e300}}};
  const auto text = ground_truth_to_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), "frame_index,t,x,y,z");
  EXPECT_EQ(ground_truth_from_csv(text), rows);

  try {
    ground_truth_from_csv("frame,t,x,y,z\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0U);
  }
  const std::string bad = "frame_index,t,x,y,z\n0,0,1,2,3\n1,0.1,abc,2,3\n";
  try {
    ground_truth_from_csv(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), bad.find("1,0.1"));
  }
  EXPECT_THROW(ground_truth_from_csv("frame_index,t,x,y,z\n0,0,1,2\n"), ParseError);
}

TEST(SyntheticSequenceTest, LabelsAndDeterminism) {
  const auto seq = short_sequence("s", 2.0, 3);
  EXPECT_EQ(seq.frame_count(), 20U);
  const auto gt = seq.ground_truth();
  ASSERT_EQ(gt.size(), 20U);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    EXPECT_EQ(gt[i].frame_index, i);
    EXPECT_DOUBLE_EQ(gt[i].t, i * 0.1);
    EXPECT_EQ(gt[i].position, seq.scene().trajectory.pose_at(i * 0.1).position);
    EXPECT_EQ(*seq.truth(i), gt[i].position);
  }
  EXPECT_FALSE(seq.truth(20).has_value());
  const auto again = short_sequence("s", 2.0, 3);
  EXPECT_EQ(seq.frame(7, nullptr), again.frame(7, nullptr));
}

TEST(DiskSequenceTest, WriteReadBitExact) {
  const auto seq = short_sequence("seq_000", 0.5, 4);
  test::TempDir dir("ds");
  const auto root = dir.path() / "data";
  const auto summary = write_sequence(seq, root / sequence_dir_name(0), SampleEncoding::float32, 2);
  EXPECT_EQ(summary.frames, 5U);
  EXPECT_EQ(summary.sequences, 1U);
  EXPECT_EQ(summary.max_scatterers, 1U + 8U + 1U + 3U);
  EXPECT_TRUE(std::filesystem::exists(root / "seq_000" / "config.txt"));
  EXPECT_TRUE(std::filesystem::exists(root / "seq_000" / "gt.csv"));
  EXPECT_TRUE(std::filesystem::exists(root / "seq_000" / "frames.rcube"));

  auto all = open_dataset(root);
  ASSERT_EQ(all.size(), 1U);
  auto& disk = *all[0];
  EXPECT_EQ(disk.id(), "seq_000");
  EXPECT_EQ(disk.config(), seq.config());
  EXPECT_EQ(disk.frame_count(), 5U);
  EXPECT_EQ(disk.ground_truth(), seq.ground_truth());
  for (std::size_t i = 0; i < 5; ++i) {
    const auto a = disk.frame(i);
    auto b = seq.frame(i, nullptr);
    // Stored as float32: compare at stored precision.
    for (auto& v : b.values().data()) {
      v = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
    }
    EXPECT_EQ(a.values(), b.values()) << i;
    EXPECT_EQ(disk.truth(i), seq.truth(i));
  }
  // A sequence directory itself is accepted too.
  EXPECT_EQ(open_dataset(root / "seq_000").size(), 1U);
  EXPECT_THROW(list_sequences(dir.path() / "nothing"), Error);

  // Same seed, second write: bit-identical files.
  write_sequence(seq, dir.path() / "again", SampleEncoding::float32, 1);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  EXPECT_EQ(slurp(root / "seq_000" / "frames.rcube"), slurp(dir.path() / "again" / "frames.rcube"));
  EXPECT_EQ(slurp(root / "seq_000" / "gt.csv"), slurp(dir.path() / "again" / "gt.csv"));
}

TEST(DiskSequenceTest, CorruptCaptureFailsOnOpen) {
  const auto seq = short_sequence("x", 0.3, 5);
  test::TempDir dir("corrupt");
  write_sequence(seq, dir.path(), SampleEncoding::int16_iq, 1);
  const auto capture = dir.path() / "frames.rcube";
  {
    std::fstream f(capture, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  try {
    DiskSequence d(dir.path());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0U);
  }
}

TEST(BenchSequences, CountsAndIds) {
  BenchSpec spec;
  spec.sequences = 3;
  spec.duration = 60.0;
  const auto seqs = bench_sequences(spec, RadarConfig{});
  ASSERT_EQ(seqs.size(), 3U);
  EXPECT_EQ(seqs[2]->id(), "seq_002");
  EXPECT_EQ(seqs[0]->frame_count(), 600U);
  EXPECT_EQ(seqs[0]->ground_truth().size(), 600U);
}
