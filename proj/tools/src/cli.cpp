#include "dronerad/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dronerad/dataset.hpp"
#include "dronerad/errors.hpp"
#include "dronerad/eval.hpp"
#include "dronerad/heatmap.hpp"
#include "dronerad/pipelines.hpp"
#include "dronerad/parallel.hpp"
#include "json.hpp"

namespace dronerad {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  bool json = false;
  std::size_t workers = default_workers();
  RadarConfig radar;
};

struct Options {
  Common common;
  // simulate
  std::string out;
  std::string bench;
  std::string in;
  std::uint64_t seed = 0;
  double duration = 60.0;
  std::size_t sequences = 0;  // 0 = the default for the mode
  double snr_db = BenchSpec{}.body_snr_db;
  bool no_ghost = false;
  std::string encoding = "float32";
  // locate / bench
  std::vector<std::string> methods;
  bool all = false;
  std::size_t stride = 1;
  std::size_t warmup = 5;
  std::size_t parallel_stride = 10;
  std::size_t parallel_workers = 16;
  // export
  std::size_t chirps = kDefaultChirpsPerSample;
  // plot
  std::string estimates;
  std::string gt;
  std::string name;
  // locate
  std::string detections;
};

void add_common(CLI::App* sub, Common& c, bool workers = true) {
  sub->add_option("--config", c.config, "key = value file; radar keys plus any long flag name (flags win)");
  sub->add_flag("--json", c.json, "Print a machine-readable JSON summary");
  if (workers) {
    sub->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError("cannot read config file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Radar keys configure the radar; every other key fills the flag of the same name unless it was
// given on the command line.
void apply_config(CLI::App* sub, Common& common) {
  if (common.config.empty()) {
    return;
  }
  auto values = parse_key_values(read_file(common.config));
  common.radar = config_from_values(values);
  for (const auto& [key, value] : values) {
    CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw UsageError("unknown key '" + key + "' in " + common.config);
    }
    if (opt->count() == 0) {
      opt->add_result(value);
      opt->run_callback();
    }
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw UsageError(std::string(flag) + " is required");
  }
}

BenchSpec bench_spec(const Options& o, CLI::App* sub) {
  if (o.bench != "sim-bench-v1") {
    throw UsageError("unknown benchmark '" + o.bench + "' (valid: sim-bench-v1)");
  }
  BenchSpec spec = BenchSpec::sim_bench_v1();
  if (sub->get_option_no_throw("--seed") && sub->get_option("--seed")->count() > 0) {
    spec.first_seed = o.seed;
  }
  if (sub->get_option_no_throw("--duration") && sub->get_option("--duration")->count() > 0) {
    spec.duration = o.duration;
  }
  if (o.sequences > 0) {
    spec.sequences = o.sequences;
  }
  return spec;
}

// Exactly one of --in (dataset on disk) and --bench (synthesized in memory).
std::vector<std::unique_ptr<Sequence>> sequences_for(const Options& o, CLI::App* sub, std::string& label) {
  if (o.in.empty() == o.bench.empty()) {
    throw UsageError("give exactly one of --in and --bench");
  }
  if (!o.bench.empty()) {
    label = o.bench;
    return bench_sequences(bench_spec(o, sub), o.common.radar);
  }
  label = o.in;
  auto seqs = open_dataset(o.in);
  if (o.sequences > 0 && o.sequences < seqs.size()) {
    seqs.resize(o.sequences);
  }
  return seqs;
}

std::vector<Method> methods_for(const Options& o) {
  if (o.all || o.methods.empty()) {
    return {kAllMethods.begin(), kAllMethods.end()};
  }
  std::vector<Method> out;
  for (const auto& m : o.methods) {
    const Method parsed = parse_method(m);
    if (std::find(out.begin(), out.end(), parsed) == out.end()) {
      out.push_back(parsed);
    }
  }
  return out;
}

json cmd_simulate(const Options& o, CLI::App* sub, std::ostream& out) {
  BenchSpec spec;
  if (!o.bench.empty()) {
    spec = bench_spec(o, sub);
  } else {
    spec.first_seed = o.seed;
    spec.duration = o.duration;
    spec.sequences = o.sequences > 0 ? o.sequences : 1;
  }
  spec.body_snr_db = o.snr_db;
  spec.with_ghost = !o.no_ghost;
  const auto encoding = o.encoding == "int16" ? SampleEncoding::int16_iq : SampleEncoding::float32;

  WriteSummary total;
  for (std::size_t i = 0; i < spec.sequences; ++i) {
    const SyntheticSequence seq(sequence_dir_name(i), bench_scene(spec, i, o.common.radar), o.common.radar,
                                spec.duration);
    const auto s = write_sequence(seq, fs::path(o.out) / seq.id(), encoding, o.common.workers);
    total.sequences += 1;
    total.frames += s.frames;
    total.max_scatterers = std::max(total.max_scatterers, s.max_scatterers);
    total.dropped_scatterers += s.dropped_scatterers;
  }
  if (!o.common.json) {
    out << "wrote " << total.sequences << " sequence(s), " << total.frames << " frames to " << o.out << "\n"
        << "scatterers per chirp: up to " << total.max_scatterers << " (" << total.dropped_scatterers
        << " beyond max range)\n";
  }
  return {{"command", "simulate"},
          {"out", o.out},
          {"sequences", total.sequences},
          {"frames", total.frames},
          {"max_scatterers", total.max_scatterers},
          {"dropped_scatterers", total.dropped_scatterers},
          {"first_seed", spec.first_seed},
          {"duration_s", spec.duration},
          {"encoding", o.encoding}};
}

// `base` itself for a single sequence, `base/<id>.csv` when there are several.
fs::path per_sequence_path(const fs::path& base, const std::string& id, bool several) {
  if (several) {
    fs::create_directories(base);
    return base / (id + ".csv");
  }
  if (base.has_parent_path()) {
    fs::create_directories(base.parent_path());
  }
  return base;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    throw Error("failed writing " + path.string());
  }
}

json cmd_locate(const Options& o, CLI::App* sub, std::ostream& out) {
  const Method method = parse_method(o.methods.front());
  std::string label;
  auto seqs = sequences_for(o, sub, label);
  PipelineParams params;
  params.music.workers = o.common.workers;

  json files = json::array();
  std::size_t ok = 0, missing = 0;
  for (const auto& seq : seqs) {
    const auto& cfg = seq->config();
    const auto layout = VirtualArrayLayout::standard(cfg);
    std::vector<FrameEstimate> rows;
    std::vector<FrameDetections> dets;
    for (std::size_t f = 0; f < seq->frame_count(); f += o.stride) {
      const DataCube cube = seq->frame(f);
      if (!o.detections.empty()) {
        dets.push_back({f, {}});
        point_cloud(cube, cfg, layout, params.point_cloud, &dets.back().detections);
      }
      FrameEstimate e{f, cube.timestamp, std::nullopt};
      try {
        e.position = locate(method, cube, cfg, layout, params).position();
        ++ok;
      } catch (const NoTargetError&) {
        ++missing;
      }
      rows.push_back(e);
    }
    const fs::path path = per_sequence_path(o.out, seq->id(), seqs.size() > 1);
    write_estimates(path, rows);
    json entry{{"sequence", seq->id()}, {"path", path.string()}, {"rows", rows.size()}};
    if (!o.detections.empty()) {
      const fs::path dpath = per_sequence_path(o.detections, seq->id(), seqs.size() > 1);
      write_text(dpath, detections_to_csv(dets));
      entry["detections"] = dpath.string();
    }
    files.push_back(entry);
  }
  if (!o.common.json) {
    out << method_name(method) << ": " << ok << " frames located, " << missing << " no_target, written to " << o.out
        << "\n";
  }
  return {{"command", "locate"}, {"method", method_name(method)}, {"ok", ok}, {"no_target", missing}, {"files", files}};
}

json cmd_bench(const Options& o, CLI::App* sub, std::ostream& out, std::ostream& err) {
  std::string label;
  auto seqs = sequences_for(o, sub, label);
  BenchOptions bo;
  bo.methods = methods_for(o);
  bo.params.music.workers = 1;
  bo.stride = o.stride;
  bo.warmup = o.warmup;
  bo.parallel_workers = o.common.workers;
  bo.parallel_stride = o.parallel_stride;
  bo.progress = [&err](const std::string& id, std::size_t done, std::size_t total) {
    if (done == total) {
      err << "bench: " << id << " done (" << total << " frames)\n";
    }
  };
  const auto result = run_benchmark(seqs, bo);
  write_bench_artifacts(result, label, o.out);
  for (const auto& m : result.methods) {
    const fs::path dir = fs::path(o.out) / "estimates" / m.name;
    fs::create_directories(dir);
    for (const auto& [id, rows] : m.estimates) {
      write_estimates(dir / (id + ".csv"), rows);
    }
  }
  if (!o.common.json) {
    out << std::left << std::setw(12) << "method" << std::right << std::setw(10) << "mean_cm" << std::setw(10)
        << "std_cm" << std::setw(10) << "max_cm" << std::setw(10) << "min_cm" << std::setw(9) << "dropped"
        << std::setw(12) << "ms/frame" << "\n"
        << std::fixed << std::setprecision(2);
    for (const auto& m : result.methods) {
      const auto& s = m.errors.summary;
      out << std::left << std::setw(12) << m.name << std::right << std::setw(10) << s.mean << std::setw(10) << s.std
          << std::setw(10) << s.max << std::setw(10) << s.min << std::setw(9) << m.errors.dropped_frames
          << std::setw(12) << m.runtime.mean_ms << "\n";
    }
    for (const auto& r : result.runtimes) {
      if (r.workers > 1) {
        out << r.method << " with " << r.workers << " workers: " << r.mean_ms << " ms/frame\n";
      }
    }
    out << "artifacts in " << o.out << "\n";
  }
  json doc = json::parse(report_json(result, label));
  doc["command"] = "bench";
  doc["out"] = o.out;
  return doc;
}

json cmd_export(const Options& o, CLI::App* sub, std::ostream& out, std::ostream& err) {
  std::string label;
  auto seqs = sequences_for(o, sub, label);
  ExportOptions eo;
  eo.chirps_per_sample = o.chirps;
  eo.stride = o.stride;
  eo.workers = o.common.workers;
  const auto s = export_training_set(seqs, o.out, eo);
  for (const auto& k : s.skipped) {
    err << "export: skipped " << k.sequence_id << " frame " << k.frame_index << " (no ground truth)\n";
  }
  if (!o.common.json) {
    out << "wrote " << s.records << " records (" << kMapsPerChirp * o.chirps << " heatmaps each) to "
        << s.htmp_path.string() << "\n";
  }
  return {{"command", "export"},
          {"records", s.records},
          {"heatmaps_per_record", kMapsPerChirp * o.chirps},
          {"skipped", s.skipped.size()},
          {"htmp", s.htmp_path.string()},
          {"manifest", s.manifest_path.string()}};
}

json cmd_plot(const Options& o, std::ostream& out) {
  fs::path gt = o.gt;
  if (fs::is_directory(gt)) {
    gt /= "gt.csv";
  }
  const auto report = error_stats(read_estimates(o.estimates), read_ground_truth(gt));
  const std::string name = o.name.empty() ? fs::path(o.estimates).stem().string() : o.name;
  write_curves(name, report, o.out);
  if (!o.common.json) {
    out << name << ": mean " << report.summary.mean << " cm over " << report.errors.size() << " frames ("
        << report.dropped_frames << " dropped); curves in " << o.out << "\n";
  }
  return {{"command", "plot"},
          {"name", name},
          {"frames", report.errors.size()},
          {"dropped_frames", report.dropped_frames},
          {"mean_cm", report.summary.mean},
          {"cdf", (fs::path(o.out) / ("cdf_" + name + ".csv")).string()},
          {"err_vs_dist", (fs::path(o.out) / ("err_vs_dist_" + name + ".csv")).string()}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"FMCW mmWave radar toolkit for drone localization", "dronerad"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Synthesize a dataset of drone flights");
  add_common(simulate, o.common);
  simulate->add_option("--out", o.out, "Output dataset directory");
  simulate->add_option("--bench", o.bench, "Named benchmark (sim-bench-v1)");
  simulate->add_option("--seed", o.seed, "Seed of the first sequence");
  simulate->add_option("--duration", o.duration, "Seconds per sequence")->check(CLI::PositiveNumber);
  simulate->add_option("--sequences", o.sequences, "Number of sequences");
  simulate->add_option("--snr-db", o.snr_db, "Body SNR per sample at 1 m");
  simulate->add_flag("--no-ghost", o.no_ghost, "Disable the multipath ghost");
  simulate->add_option("--encoding", o.encoding, "Sample encoding")->check(CLI::IsMember({"float32", "int16"}));

  auto* locate_cmd = app.add_subcommand("locate", "Run one localization pipeline over a dataset");
  add_common(locate_cmd, o.common);
  locate_cmd->add_option("--method", o.methods, "pointcloud|fft2d|fft3d|music2d|music3d");
  locate_cmd->add_option("--in", o.in, "Dataset or sequence directory");
  locate_cmd->add_option("--bench", o.bench, "Synthesize a named benchmark instead of reading --in");
  locate_cmd->add_option("--seed", o.seed, "Seed of the first synthesized sequence");
  locate_cmd->add_option("--duration", o.duration, "Seconds per synthesized sequence")->check(CLI::PositiveNumber);
  locate_cmd->add_option("--sequences", o.sequences, "Only the first n sequences");
  locate_cmd->add_option("--out", o.out, "Estimates CSV (directory when there are several sequences)");
  locate_cmd->add_option("--stride", o.stride, "Every n-th frame")->check(CLI::PositiveNumber);
  locate_cmd->add_option("--detections", o.detections,
                         "Also write the CFAR detections CSV (directory when there are several sequences)");

  auto* bench = app.add_subcommand("bench", "Error and runtime benchmark of the pipelines");
  add_common(bench, o.common);
  bench->add_option("--in", o.in, "Dataset directory");
  bench->add_option("--bench", o.bench, "Named benchmark synthesized in memory (sim-bench-v1)");
  bench->add_option("--seed", o.seed, "Seed of the first synthesized sequence");
  bench->add_option("--duration", o.duration, "Seconds per synthesized sequence")->check(CLI::PositiveNumber);
  bench->add_option("--sequences", o.sequences, "Only the first n sequences");
  bench->add_option("--method", o.methods, "Pipeline to run (repeatable)");
  bench->add_flag("--all", o.all, "Run all five pipelines");
  bench->add_option("--out", o.out, "Artifact directory");
  bench->add_option("--stride", o.stride, "Every n-th frame")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", o.warmup, "Frames per method excluded from timing");
  bench->add_option("--parallel-stride", o.parallel_stride,
                    "Time MUSIC with --workers threads on every n-th frame (0 = off)");

  auto* export_cmd = app.add_subcommand("export", "Export heatmap training records");
  add_common(export_cmd, o.common);
  export_cmd->add_option("--in", o.in, "Dataset directory");
  export_cmd->add_option("--bench", o.bench, "Named benchmark synthesized in memory");
  export_cmd->add_option("--seed", o.seed, "Seed of the first synthesized sequence");
  export_cmd->add_option("--duration", o.duration, "Seconds per synthesized sequence")->check(CLI::PositiveNumber);
  export_cmd->add_option("--sequences", o.sequences, "Only the first n sequences");
  export_cmd->add_option("--out", o.out, "Output directory");
  export_cmd->add_option("--chirps", o.chirps, "Chirps per record")->check(CLI::PositiveNumber);
  export_cmd->add_option("--stride", o.stride, "Every n-th frame")->check(CLI::PositiveNumber);

  auto* plot = app.add_subcommand("plot", "Emit CDF and error-vs-distance curves for an estimates CSV");
  add_common(plot, o.common, false);
  plot->add_option("--estimates", o.estimates, "Estimates CSV (frame,t,x,y,z,status)");
  plot->add_option("--gt", o.gt, "gt.csv or a sequence directory");
  plot->add_option("--out", o.out, "Output directory");
  plot->add_option("--name", o.name, "Curve name (default: estimates file stem)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  auto fail = [&](int code, const std::string& message) {
    err << "error: " << message << "\n";
    if (code == kExitUsage) {
      err << sub->help();
    }
    if (o.common.json) {
      out << json{{"command", name}, {"error", message}, {"exit_code", code}}.dump() << "\n";
    }
    return code;
  };

  try {
    apply_config(sub, o.common);
    if (name == "plot") {
      require(o.estimates, "--estimates");
      require(o.gt, "--gt");
    }
    require(o.out, "--out");
    if (name == "locate") {
      if (o.methods.size() != 1) {
        throw UsageError("--method must be given exactly once");
      }
      parse_method(o.methods.front());
    }
    if (name == "bench") {
      methods_for(o);
    }
    if (name != "simulate" && name != "plot" && o.in.empty() == o.bench.empty()) {
      throw UsageError("give exactly one of --in and --bench");
    }
  } catch (const UsageError& e) {
    return fail(kExitUsage, e.what());
  } catch (const ConfigError& e) {
    return fail(kExitUsage, e.what());
  } catch (const ParseError& e) {
    return fail(kExitUsage, e.what());
  } catch (const CLI::Error& e) {
    return fail(kExitUsage, e.what());
  }

  try {
    json summary;
    if (name == "simulate") {
      summary = cmd_simulate(o, sub, out);
    } else if (name == "locate") {
      summary = cmd_locate(o, sub, out);
    } else if (name == "bench") {
      summary = cmd_bench(o, sub, out, err);
    } else if (name == "export") {
      summary = cmd_export(o, sub, out, err);
    } else {
      summary = cmd_plot(o, out);
    }
    if (o.common.json) {
      out << summary.dump(2) << "\n";
    }
    return kExitOk;
  } catch (const UsageError& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, e.what());
  }
}

}  // namespace dronerad
