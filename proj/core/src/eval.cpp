#include "dronerad/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "dronerad/errors.hpp"
#include "json.hpp"

namespace dronerad {
namespace {

constexpr const char* kEstimatesHeader = "frame,t,x,y,z,status";

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      r[idx[k]] = avg;
    }
    i = j + 1;
  }
  return r;
}

ErrorReport finish_report(std::vector<double> errors, std::vector<double> ranges, std::size_t dropped) {
  ErrorReport r;
  r.errors = std::move(errors);
  r.ranges = std::move(ranges);
  r.dropped_frames = dropped;
  if (!r.errors.empty()) {
    r.summary = summarize(r.errors);
    r.cdf = cdf(r.errors);
    r.by_distance = error_vs_distance(r.errors, r.ranges);
  }
  return r;
}

bool parse_double(std::string_view s, double& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::pointcloud:
      return "pointcloud";
    case Method::fft2d:
      return "fft2d";
    case Method::fft3d:
      return "fft3d";
    case Method::music2d:
      return "music2d";
    case Method::music3d:
      return "music3d";
  }
  return "";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) {
      return m;
    }
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (valid: pointcloud, fft2d, fft3d, music2d, music3d)");
}

bool is_music(Method m) { return m == Method::music2d || m == Method::music3d; }

PositionEstimate locate(Method m, const DataCube& cube, const RadarConfig& cfg, const VirtualArrayLayout& layout,
                        const PipelineParams& params) {
  switch (m) {
    case Method::pointcloud:
      return locate_point_cloud(cube, cfg, layout, params.point_cloud);
    case Method::fft2d:
      return locate_fft_2d(cube, cfg, layout, params.fft);
    case Method::fft3d:
      return locate_fft_3d(cube, cfg, layout, params.fft);
    case Method::music2d:
      return locate_music_2d(cube, cfg, layout, params.grid, params.music).position;
    case Method::music3d:
      return locate_music_3d(cube, cfg, layout, params.grid, params.music).position;
  }
  throw ConfigError("unknown method");
}

std::string estimates_to_csv(std::span<const FrameEstimate> rows) {
  std::string out = std::string(kEstimatesHeader) + "\n";
  char buf[192];
  for (const auto& r : rows) {
    if (r.position) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,ok\n", r.frame_index, r.t, r.position->x,
                    r.position->y, r.position->z);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,,,,no_target\n", r.frame_index, r.t);
    }
    out += buf;
  }
  return out;
}

std::vector<FrameEstimate> estimates_from_csv(const std::string& text) {
  std::vector<FrameEstimate> out;
  std::istringstream in(text);
  std::string line;
  std::size_t pos = 0;
  bool header = true;
  while (std::getline(in, line)) {
    const std::size_t start = pos;
    pos += line.size() + 1;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (header) {
      if (line != kEstimatesHeader) {
        throw ParseError("estimates header must be '" + std::string(kEstimatesHeader) + "'", start);
      }
      header = false;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string_view> f;
    std::string_view v(line);
    for (std::size_t b = 0;;) {
      const auto c = v.find(',', b);
      f.push_back(v.substr(b, c == std::string_view::npos ? std::string_view::npos : c - b));
      if (c == std::string_view::npos) {
        break;
      }
      b = c + 1;
    }
    FrameEstimate e;
    bool ok = f.size() == 6;
    if (ok) {
      const auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), e.frame_index);
      ok = ec == std::errc{} && p == f[0].data() + f[0].size() && parse_double(f[1], e.t);
    }
    if (ok && f[5] == "ok") {
      Vec3 p;
      ok = parse_double(f[2], p.x) && parse_double(f[3], p.y) && parse_double(f[4], p.z);
      e.position = p;
    } else if (ok) {
      ok = f[5] == "no_target";
    }
    if (!ok) {
      throw ParseError("malformed estimates row '" + line + "'", start);
    }
    out.push_back(e);
  }
  if (header) {
    throw ParseError("estimates file is empty", 0);
  }
  return out;
}

void write_estimates(const std::filesystem::path& path, std::span<const FrameEstimate> rows) {
  std::ofstream out(path, std::ios::binary);
  out << estimates_to_csv(rows);
  if (!out) {
    throw Error("failed writing " + path.string());
  }
}

std::vector<FrameEstimate> read_estimates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return estimates_from_csv(ss.str());
}

ErrorSummary summarize(std::span<const double> errors) {
  if (errors.empty()) {
    throw ConfigError("no errors to summarize");
  }
  ErrorSummary s;
  const double n = static_cast<double>(errors.size());
  s.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : errors) {
    ss += (e - s.mean) * (e - s.mean);
  }
  s.std = std::sqrt(ss / n);
  const auto [lo, hi] = std::minmax_element(errors.begin(), errors.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

std::vector<CdfPoint> cdf(std::span<const double> errors) {
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CdfPoint> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out[i] = {sorted[i], static_cast<double>(i + 1) / static_cast<double>(sorted.size())};
  }
  if (!out.empty()) {
    out.back().fraction = 1.0;
  }
  return out;
}

double cdf_at(std::span<const CdfPoint> curve, double x) {
  const auto it = std::upper_bound(curve.begin(), curve.end(), x,
                                   [](double v, const CdfPoint& p) { return v < p.error; });
  return it == curve.begin() ? 0.0 : std::prev(it)->fraction;
}

std::vector<DistanceBin> error_vs_distance(std::span<const double> errors, std::span<const double> ranges,
                                           double step, double origin) {
  if (errors.size() != ranges.size()) {
    throw ConfigError("errors and ranges differ in length");
  }
  if (!(step > 0.0)) {
    throw ConfigError("distance step must be positive");
  }
  // Tolerance keeps values such as 1.3 out of the bin below when (r - origin) / step rounds down.
  std::map<long long, std::pair<double, std::size_t>> bins;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const auto k = static_cast<long long>(std::floor((ranges[i] - origin) / step + 1e-9));
    auto& b = bins[k];
    b.first += errors[i];
    ++b.second;
  }
  std::vector<DistanceBin> out;
  out.reserve(bins.size());
  for (const auto& [k, b] : bins) {
    out.push_back({origin + (static_cast<double>(k) + 0.5) * step, b.first / static_cast<double>(b.second), b.second});
  }
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ConfigError("spearman needs two equally long series of at least 2 points");
  }
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) {
    return std::nan("");
  }
  return sxy / std::sqrt(sxx * syy);
}

ErrorReport error_stats(std::span<const FrameEstimate> estimates, std::span<const GroundTruthRow> truth) {
  std::map<std::size_t, Vec3> gt;
  for (const auto& r : truth) {
    gt[r.frame_index] = r.position;
  }
  std::vector<double> errors, ranges;
  std::size_t matched = 0, dropped = 0;
  for (const auto& e : estimates) {
    const auto it = gt.find(e.frame_index);
    if (it == gt.end()) {
      continue;
    }
    ++matched;
    if (!e.position) {
      ++dropped;
      continue;
    }
    errors.push_back((*e.position - it->second).norm() * 100.0);
    ranges.push_back(it->second.norm());
  }
  if (matched == 0) {
    throw ConfigError("no estimate matches a ground-truth frame");
  }
  return finish_report(std::move(errors), std::move(ranges), dropped);
}

ErrorReport merge_reports(std::span<const ErrorReport> reports) {
  std::vector<double> errors, ranges;
  std::size_t dropped = 0;
  for (const auto& r : reports) {
    errors.insert(errors.end(), r.errors.begin(), r.errors.end());
    ranges.insert(ranges.end(), r.ranges.begin(), r.ranges.end());
    dropped += r.dropped_frames;
  }
  return finish_report(std::move(errors), std::move(ranges), dropped);
}

const MethodResult* BenchResult::find(std::string_view name) const {
  for (const auto& m : methods) {
    if (m.name == name) {
      return &m;
    }
  }
  return nullptr;
}

const RuntimeReport* BenchResult::find_runtime(std::string_view method, std::size_t workers) const {
  for (const auto& r : runtimes) {
    if (r.method == method && r.workers == workers) {
      return &r;
    }
  }
  return nullptr;
}

BenchResult run_benchmark(std::span<const std::unique_ptr<Sequence>> sequences, const BenchOptions& options) {
  if (options.stride == 0) {
    throw ConfigError("bench stride must be at least 1");
  }
  if (options.methods.empty()) {
    throw ConfigError("no methods to benchmark");
  }
  using clock = std::chrono::steady_clock;
  const std::size_t nm = options.methods.size();
  const std::size_t single_workers = std::max<std::size_t>(options.params.music.workers, 1);
  PipelineParams parallel = options.params;
  parallel.music.workers = std::max<std::size_t>(options.parallel_workers, 1);

  struct Timing {
    double total_ms = 0.0;
    std::size_t seen = 0;
    std::size_t timed = 0;
    void add(double ms, std::size_t warmup) {
      if (seen++ >= warmup) {
        total_ms += ms;
        ++timed;
      }
    }
  };
  std::vector<Timing> single(nm), par(nm);
  std::vector<std::vector<ErrorReport>> reports(nm);

  BenchResult result;
  result.methods.resize(nm);
  for (std::size_t m = 0; m < nm; ++m) {
    result.methods[m].name = std::string(method_name(options.methods[m]));
  }

  std::size_t evaluated = 0;
  for (const auto& seq : sequences) {
    const auto& cfg = seq->config();
    const auto layout = VirtualArrayLayout::standard(cfg);
    std::vector<std::vector<FrameEstimate>> est(nm);
    std::vector<GroundTruthRow> truth;
    const std::size_t total = (seq->frame_count() + options.stride - 1) / options.stride;
    std::size_t done = 0;
    for (std::size_t f = 0; f < seq->frame_count(); f += options.stride, ++done) {
      if (options.progress) {
        options.progress(seq->id(), done, total);
      }
      const auto label = seq->truth(f);
      const DataCube cube = seq->frame(f);
      if (label) {
        truth.push_back({f, cube.timestamp, *label});
      }
      const bool time_parallel = options.parallel_stride > 0 && evaluated % options.parallel_stride == 0;
      for (std::size_t m = 0; m < nm; ++m) {
        const Method method = options.methods[m];
        FrameEstimate fe{f, cube.timestamp, std::nullopt};
        const auto start = clock::now();
        try {
          fe.position = locate(method, cube, cfg, layout, options.params).position();
        } catch (const Error&) {
          // no target or a pipeline failure: recorded as a dropped frame
        }
        single[m].add(std::chrono::duration<double, std::milli>(clock::now() - start).count(), options.warmup);
        est[m].push_back(fe);
        if (is_music(method) && time_parallel) {
          const auto p0 = clock::now();
          try {
            locate(method, cube, cfg, layout, parallel);
          } catch (const Error&) {
          }
          par[m].add(std::chrono::duration<double, std::milli>(clock::now() - p0).count(), options.warmup > 0 ? 1 : 0);
        }
      }
      ++evaluated;
    }
    if (options.progress) {
      options.progress(seq->id(), total, total);
    }
    for (std::size_t m = 0; m < nm; ++m) {
      if (!truth.empty()) {
        reports[m].push_back(error_stats(est[m], truth));
      }
      result.methods[m].estimates.emplace_back(seq->id(), std::move(est[m]));
    }
  }
  result.frames = evaluated;

  for (std::size_t m = 0; m < nm; ++m) {
    auto& mr = result.methods[m];
    mr.errors = merge_reports(reports[m]);
    const auto& t = single[m];
    mr.runtime = {mr.name, t.timed ? t.total_ms / static_cast<double>(t.timed) : 0.0,
                  is_music(options.methods[m]) ? single_workers : 1, t.timed};
    result.runtimes.push_back(mr.runtime);
  }
  for (std::size_t m = 0; m < nm; ++m) {
    const auto& t = par[m];
    if (is_music(options.methods[m]) && t.timed > 0) {
      result.runtimes.push_back({result.methods[m].name, t.total_ms / static_cast<double>(t.timed),
                                 parallel.music.workers, t.timed});
    }
  }
  return result;
}

std::string report_json(const BenchResult& result, const std::string& dataset) {
  using nlohmann::json;
  json methods = json::array();
  for (const auto& m : result.methods) {
    const auto& e = m.errors;
    json bins = json::array();
    for (const auto& b : e.by_distance) {
      bins.push_back({{"center_m", b.center}, {"mean_error_cm", b.mean_error}, {"count", b.count}});
    }
    json spearman_value = nullptr;
    if (e.by_distance.size() >= 2) {
      std::vector<double> c, v;
      for (const auto& b : e.by_distance) {
        c.push_back(b.center);
        v.push_back(b.mean_error);
      }
      const double s = spearman(c, v);
      if (std::isfinite(s)) {
        spearman_value = s;
      }
    }
    methods.push_back({{"name", m.name},
                       {"frames", e.errors.size()},
                       {"dropped_frames", e.dropped_frames},
                       {"error_cm",
                        {{"mean", e.summary.mean}, {"std", e.summary.std}, {"max", e.summary.max}, {"min", e.summary.min}}},
                       {"by_distance", bins},
                       {"distance_spearman", spearman_value},
                       {"runtime", {{"mean_ms", m.runtime.mean_ms}, {"workers", m.runtime.workers}, {"frames", m.runtime.frames}}}});
  }
  json runtimes = json::array();
  for (const auto& r : result.runtimes) {
    runtimes.push_back({{"method", r.method}, {"mean_ms", r.mean_ms}, {"workers", r.workers}, {"frames", r.frames}});
  }
  json doc = {{"schema", "dronerad-report-v1"},
              {"dataset", dataset},
              {"frames", result.frames},
              {"methods", methods},
              {"runtimes", runtimes}};
  return doc.dump(2) + "\n";
}

void write_curves(const std::string& method, const ErrorReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream c(dir / ("cdf_" + method + ".csv"), std::ios::binary);
  c << "error_cm,fraction\n";
  char buf[96];
  for (const auto& p : report.cdf) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.error, p.fraction);
    c << buf;
  }
  std::ofstream d(dir / ("err_vs_dist_" + method + ".csv"), std::ios::binary);
  d << "center_m,mean_error_cm,count\n";
  for (const auto& b : report.by_distance) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", b.center, b.mean_error, b.count);
    d << buf;
  }
  if (!c || !d) {
    throw Error("failed writing curves for " + method);
  }
}

void write_bench_artifacts(const BenchResult& result, const std::string& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "report.json", std::ios::binary);
  out << report_json(result, dataset);
  if (!out) {
    throw Error("failed writing " + (dir / "report.json").string());
  }
  for (const auto& m : result.methods) {
    write_curves(m.name, m.errors, dir);
  }
}

}  // namespace dronerad
