#pragma once

// Localization error statistics, runtime benchmarking and the report artifacts.

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dronerad/dataset.hpp"
#include "dronerad/music.hpp"
#include "dronerad/pipelines.hpp"

namespace dronerad {

enum class Method { pointcloud, fft2d, fft3d, music2d, music3d };

inline constexpr std::array<Method, 5> kAllMethods{Method::pointcloud, Method::fft2d, Method::fft3d, Method::music2d,
                                                   Method::music3d};

std::string_view method_name(Method m);
/// Throws ConfigError listing the valid names.
Method parse_method(std::string_view name);
bool is_music(Method m);

struct PipelineParams {
  PointCloudParams point_cloud;
  FftParams fft;
  MusicParams music;
  SweepGrid grid = SweepGrid::standard();
};

/// Runs one pipeline. Throws NoTargetError when it finds nothing.
PositionEstimate locate(Method m, const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                        const PipelineParams& params);

// Estimates CSV, shared with external estimators: frame,t,x,y,z,status where status is `ok`
// or `no_target` (coordinates empty).
struct FrameEstimate {
  std::size_t frame_index = 0;
  double t = 0.0;
  std::optional<Vec3> position;

  bool operator==(const FrameEstimate&) const = default;
};

std::string estimates_to_csv(std::span<const FrameEstimate> rows);
std::vector<FrameEstimate> estimates_from_csv(const std::string& text);
void write_estimates(const std::filesystem::path& path, std::span<const FrameEstimate> rows);
std::vector<FrameEstimate> read_estimates(const std::filesystem::path& path);

struct ErrorSummary {
  double mean = 0.0;  // cm
  double std = 0.0;   // cm, population
  double max = 0.0;
  double min = 0.0;
};

struct CdfPoint {
  double error = 0.0;  // cm
  double fraction = 0.0;
};

struct DistanceBin {
  double center = 0.0;      // m
  double mean_error = 0.0;  // cm
  std::size_t count = 0;
};

struct ErrorReport {
  std::vector<double> errors;  // cm, matched frames with an estimate
  std::vector<double> ranges;  // m, ground-truth range of the same frames
  ErrorSummary summary;
  std::vector<CdfPoint> cdf;
  std::vector<DistanceBin> by_distance;
  std::size_t dropped_frames = 0;
};

inline constexpr double kDistanceStep = 0.1;    // m
inline constexpr double kDistanceOrigin = 1.0;  // m, left edge of the first bin

ErrorSummary summarize(std::span<const double> errors);
/// Sorted errors e_(i) with fraction i/n.
std::vector<CdfPoint> cdf(std::span<const double> errors);
/// Fraction of errors <= x.
double cdf_at(std::span<const CdfPoint> curve, double x);
/// Means over bins [origin + k step, origin + (k+1) step); empty bins omitted, ascending centres.
std::vector<DistanceBin> error_vs_distance(std::span<const double> errors, std::span<const double> ranges,
                                           double step = kDistanceStep, double origin = kDistanceOrigin);
/// Spearman rank correlation with average ranks for ties. Throws ConfigError for fewer than 2 points
/// or mismatched lengths; NaN when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Builds a report from estimates matched to ground truth by frame index. Estimates without a
/// position count as dropped. Throws ConfigError when no frame matches.
ErrorReport error_stats(std::span<const FrameEstimate> estimates, std::span<const GroundTruthRow> truth);
/// Pools per-sequence reports (errors concatenated, statistics recomputed).
ErrorReport merge_reports(std::span<const ErrorReport> reports);

struct RuntimeReport {
  std::string method;
  double mean_ms = 0.0;
  std::size_t workers = 1;
  std::size_t frames = 0;  // timed frames, warm-up excluded
};

struct BenchOptions {
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  PipelineParams params;         // params.music.workers is the single-worker setting
  std::size_t stride = 1;        // evaluate every stride-th frame
  std::size_t warmup = 5;        // per method, excluded from timing
  std::size_t parallel_workers = 16;
  std::size_t parallel_stride = 10;  // parallel MUSIC timing on every n-th evaluated frame; 0 disables
  std::function<void(const std::string& sequence, std::size_t done, std::size_t total)> progress;
};

struct MethodResult {
  std::string name;
  ErrorReport errors;
  RuntimeReport runtime;
  std::vector<std::pair<std::string, std::vector<FrameEstimate>>> estimates;  // per sequence
};

struct BenchResult {
  std::vector<MethodResult> methods;
  /// Single-worker runtime of every method, then the parallel MUSIC variants.
  std::vector<RuntimeReport> runtimes;
  std::size_t frames = 0;

  const MethodResult* find(std::string_view name) const;
  const RuntimeReport* find_runtime(std::string_view method, std::size_t workers) const;
};

/// Runs every pipeline on every evaluated frame. Pipeline failures on a frame are recorded as
/// dropped and the run continues.
BenchResult run_benchmark(std::span<const std::unique_ptr<Sequence>> sequences, const BenchOptions& options);

std::string report_json(const BenchResult& result, const std::string& dataset);
/// Writes report.json, cdf_<method>.csv and err_vs_dist_<method>.csv into `dir`.
void write_bench_artifacts(const BenchResult& result, const std::string& dataset, const std::filesystem::path& dir);
void write_curves(const std::string& method, const ErrorReport& report, const std::filesystem::path& dir);

}  // namespace dronerad
