// Per-frame cost of each localization pipeline and of the heatmap preprocessing on a
// sim-bench-v1 frame with the default radar config.

#include <benchmark/benchmark.h>

#include "dronerad/dataset.hpp"
#include "dronerad/errors.hpp"
#include "dronerad/eval.hpp"
#include "dronerad/heatmap.hpp"

using namespace dronerad;

namespace {

struct Fixture {
  RadarConfig cfg;
  VirtualArrayLayout layout = VirtualArrayLayout::standard(cfg);
  DataCube cube;

  Fixture() {
    const SyntheticSequence seq("bench", bench_scene(BenchSpec{}, 0, cfg), cfg, 1.0);
    cube = seq.frame(3, nullptr);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Locate(benchmark::State& state, Method m) {
  const auto& f = fixture();
  PipelineParams params;
  params.music.workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(locate(m, f.cube, f.cfg, f.layout, params));
    } catch (const Error&) {
    }
  }
}

void BM_Heatmaps(benchmark::State& state) {
  const auto& f = fixture();
  const auto chirps = select_chirps(f.cfg.chirps_per_frame, kDefaultChirpsPerSample);
  for (auto _ : state) {
    benchmark::DoNotOptimize(frame_heatmaps(f.cube, f.cfg, f.layout, chirps));
  }
}

void BM_RangeFftClutter(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(clutter_removal(range_fft(f.cube)));
  }
}

void BM_Synthesize(benchmark::State& state) {
  const RadarConfig cfg;
  const SyntheticSequence seq("bench", bench_scene(BenchSpec{}, 0, cfg), cfg, 1.0);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(seq.frame(i++ % seq.frame_count(), nullptr));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Locate, pointcloud, Method::pointcloud)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Locate, fft2d, Method::fft2d)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Locate, fft3d, Method::fft3d)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Locate, music2d, Method::music2d)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Locate, music3d, Method::music3d)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK(BM_Heatmaps)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RangeFftClutter)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Synthesize)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
