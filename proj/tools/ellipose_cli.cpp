// Command-line front end: synthetic data, the 2D registration benchmark, pose
// estimation and evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ellipose/io.hpp"
#include "ellipose/report.hpp"

namespace {

using namespace ellipose;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

MetricKind MetricOrUsage(const std::string& name) {
  const auto kind = ParseMetric(name);
  if (!kind) {
    throw UsageError("unknown metric '" + name + "'; valid names: " + MetricNameList());
  }
  return *kind;
}

std::string JoinPath(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kInvalidArgument, "cannot create '" + dir + "': " + ec.message());
}

// ---- synth ----

struct SynthArgs {
  std::string config;
  std::string map_out = "map.json";
  std::string frames_out = "frames.json";
  std::optional<std::uint64_t> seed;
  std::optional<int> n_frames;
};

int RunSynth(const SynthArgs& a) {
  SynthConfig cfg = SynthConfigFromJson(ReadJsonFile(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (a.n_frames) cfg.n_frames = *a.n_frames;
  if (!cfg.seed) throw UsageError("no seed: set \"seed\" in the config or pass --seed");
  const SyntheticScene scene = SynthGenerate(cfg);
  WriteJsonFile(a.map_out, SceneMapToJson(scene.map));
  WriteJsonFile(a.frames_out, FramesToJson(scene.frames));
  std::cout << "wrote " << scene.map.objects.size() << " objects to " << a.map_out << " and "
            << scene.frames.size() << " frames to " << a.frames_out << "\n";
  return 0;
}

// ---- register2d-bench ----

struct BenchArgs {
  int trials = 1000;
  std::uint64_t seed = 1;
  std::string noise = "both";
  std::string metrics;
  std::string pivot = "center";
  std::string out_dir = ".";
};

int RunBench(const BenchArgs& a) {
  BenchmarkConfig cfg;
  cfg.n_trials = a.trials;
  cfg.seed = a.seed;
  if (!a.metrics.empty()) {
    cfg.metrics.clear();
    std::stringstream ss(a.metrics);
    std::string name;
    while (std::getline(ss, name, ',')) cfg.metrics.push_back(MetricOrUsage(name));
  }
  if (a.pivot == "origin") cfg.pivot = RotationPivot::kImageOrigin;
  std::vector<bool> modes;
  if (a.noise == "off" || a.noise == "both") modes.push_back(false);
  if (a.noise == "on" || a.noise == "both") modes.push_back(true);

  EnsureDir(a.out_dir);
  for (bool noisy : modes) {
    cfg.noise.enabled = noisy;
    const RegistrationReport report = RunBenchmark(cfg);
    const std::string tag = noisy ? "noisy" : "noiseless";
    WriteFileAtomic(JoinPath(a.out_dir, "register2d_" + tag + "_summary.csv"),
                    RegistrationSummaryCsv(report));
    WriteFileAtomic(JoinPath(a.out_dir, "register2d_" + tag + "_trials.csv"),
                    RegistrationTrialsCsv(report));
    WriteFileAtomic(JoinPath(a.out_dir, "register2d_" + tag + ".svg"), RegistrationSvg(report));
    std::cout << tag << " (" << cfg.n_trials << " trials)\n";
    std::cout << "  metric           pos_err_px       rot_err_deg   failures\n";
    for (const MetricSummary& s : report.summaries) {
      char line[160];
      std::snprintf(line, sizeof(line), "  %-14s %12.4g %17.4g %10d\n",
                    std::string(MetricName(s.metric)).c_str(), s.mean_pos_err_px,
                    s.mean_rot_err_deg, s.failures);
      std::cout << line;
    }
  }
  return 0;
}

// ---- pose ----

struct PoseArgs {
  std::string map;
  std::string frames;
  std::string out = "estimates.json";
  std::string metric = "levelset";
  bool no_refine = false;
  bool uncertainty = false;
  std::uint64_t seed = 0;
  double init_noise_pos = 0.0;
  double init_noise_rot = 0.0;
  int max_triples = 10000;
};

int RunPose(const PoseArgs& a) {
  PoseOptions opts;
  opts.metric = MetricOrUsage(a.metric);
  opts.refine = !a.no_refine;
  opts.use_uncertainty = a.uncertainty;
  opts.seed = a.seed;
  opts.init_noise_pos = a.init_noise_pos;
  opts.init_noise_rot = a.init_noise_rot;
  opts.ransac.max_triples = a.max_triples;

  const SceneMap map = SceneMapFromJson(ReadJsonFile(a.map));
  const std::vector<FrameRecord> frames = FramesFromJson(ReadJsonFile(a.frames));
  const std::vector<FrameEstimate> estimates = EstimatePoses(frames, map, opts);
  WriteJsonFile(a.out, EstimatesToJson(estimates));

  int ok = 0;
  for (const FrameEstimate& e : estimates) ok += e.ok;
  std::cout << "estimated " << ok << " of " << estimates.size() << " frames -> " << a.out << "\n";
  for (const FrameEstimate& e : estimates) {
    if (!e.ok) std::cerr << e.frame_id << ": " << e.error << "\n";
  }
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string estimates;
  std::string frames;
  std::string out_dir = ".";
  std::string name = "eval";
  double max_position = 1.0;
  double max_orientation = 30.0;
};

int RunEval(const EvalArgs& a) {
  const std::vector<FrameEstimate> estimates = EstimatesFromJson(ReadJsonFile(a.estimates));
  const std::vector<FrameRecord> frames = FramesFromJson(ReadJsonFile(a.frames));
  EvalOptions opts;
  opts.max_position = a.max_position;
  opts.max_orientation = a.max_orientation;
  const EvalReport report = Evaluate(estimates, frames, opts);

  EnsureDir(a.out_dir);
  WriteFileAtomic(JoinPath(a.out_dir, a.name + "_frames.csv"), EvalFramesCsv(report));
  WriteFileAtomic(JoinPath(a.out_dir, a.name + "_curves.csv"), EvalCurvesCsv(report));
  WriteFileAtomic(JoinPath(a.out_dir, a.name + "_position.svg"),
                  EvalPositionSvg(report, a.name + ": position"));
  WriteFileAtomic(JoinPath(a.out_dir, a.name + "_orientation.svg"),
                  EvalOrientationSvg(report, a.name + ": orientation"));
  std::cout << "frames " << report.frames.size() << "\n"
            << "median_position_error_m " << FormatNumber(report.median_position) << "\n"
            << "median_orientation_error_deg " << FormatNumber(report.median_orientation) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera pose from ellipse detections and an ellipsoid map"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic map and frames");
  synth_cmd->add_option("config", synth.config, "SynthConfig JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--map", synth.map_out, "Output map JSON")->capture_default_str();
  synth_cmd->add_option("--frames", synth.frames_out, "Output frames JSON")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Override the config seed");
  synth_cmd->add_option("--n-frames", synth.n_frames, "Override the frame count")
      ->check(CLI::PositiveNumber);

  BenchArgs bench;
  CLI::App* bench_cmd =
      app.add_subcommand("register2d-bench", "Ellipse-to-ellipse registration benchmark");
  bench_cmd->add_option("--trials", bench.trials, "Trials per metric")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  bench_cmd->add_option("--noise", bench.noise, "Scaling noise")
      ->check(CLI::IsMember({"off", "on", "both"}))
      ->capture_default_str();
  bench_cmd->add_option("--metrics", bench.metrics, "Comma-separated metric names");
  bench_cmd->add_option("--pivot", bench.pivot, "Rotation pivot")
      ->check(CLI::IsMember({"center", "origin"}))
      ->capture_default_str();
  bench_cmd->add_option("--out-dir", bench.out_dir, "Output directory")->capture_default_str();

  PoseArgs pose;
  CLI::App* pose_cmd = app.add_subcommand("pose", "Estimate one camera pose per frame");
  pose_cmd->add_option("--map", pose.map, "Map JSON")->required();
  pose_cmd->add_option("--frames", pose.frames, "Frames JSON")->required();
  pose_cmd->add_option("--out", pose.out, "Output estimates JSON")->capture_default_str();
  pose_cmd->add_option("--metric", pose.metric, "Refinement metric")->capture_default_str();
  pose_cmd->add_flag("--no-refine", pose.no_refine, "Stop after RANSAC initialization");
  pose_cmd->add_flag("--uncertainty", pose.uncertainty, "Weight residuals by detection sigma");
  pose_cmd->add_option("--seed", pose.seed, "RANSAC / perturbation seed")->capture_default_str();
  pose_cmd->add_option("--init-noise-pos", pose.init_noise_pos,
                       "Perturb the initial position by this many meters")
      ->check(CLI::NonNegativeNumber);
  pose_cmd->add_option("--init-noise-rot", pose.init_noise_rot,
                       "Perturb the initial orientation by this many degrees")
      ->check(CLI::NonNegativeNumber);
  pose_cmd->add_option("--max-triples", pose.max_triples, "RANSAC triple budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Compare estimates with ground truth");
  eval_cmd->add_option("--estimates", eval.estimates, "Estimates JSON")->required();
  eval_cmd->add_option("--frames", eval.frames, "Frames JSON with ground-truth poses")->required();
  eval_cmd->add_option("--out-dir", eval.out_dir, "Output directory")->capture_default_str();
  eval_cmd->add_option("--name", eval.name, "Output file prefix")->capture_default_str();
  eval_cmd->add_option("--max-position", eval.max_position, "Largest position threshold (m)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--max-orientation", eval.max_orientation,
                       "Largest orientation threshold (deg)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (synth_cmd->parsed()) return RunSynth(synth);
    if (bench_cmd->parsed()) return RunBench(bench);
    if (pose_cmd->parsed()) return RunPose(pose);
    if (eval_cmd->parsed()) return RunEval(eval);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
