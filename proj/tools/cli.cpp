#include "cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rotvote/baselines.hpp"
#include "rotvote/errors.hpp"
#include "rotvote/evaluation.hpp"
#include "rotvote/flow_io.hpp"
#include "rotvote/gyro.hpp"
#include "rotvote/so3.hpp"
#include "rotvote/synthetic.hpp"
#include "rotvote/voting.hpp"

namespace fs = std::filesystem;

namespace rotvote::cli {

namespace {

struct Options {
  std::string input;
  std::string output = ".";
  double range_deg = 4.0;
  double bin_deg = 0.057;
  std::string model = "lh";
  int stride = 15;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::string method = "vote";
  int ransac_iterations = 500;
  double ransac_threshold = 1.0;
  bool no_timing = false;
  int timing_repeats = 3;
  std::string convention = "hamilton";

  std::vector<double> bins{0.01, 0.02, 0.04, 0.057, 0.08, 0.1, 0.2, 0.4};
  std::vector<int> strides{1, 5, 10, 15, 20, 40, 80};

  std::string scene;
  int frames = 10;
  double max_rotation_deg = 0.0;

  std::string gyro;
  std::string frame_times;
  std::string reference;
  std::vector<double> extrinsic_deg{0.0, 0.0, 0.0};
  double sync_search = 0.5;
  double sync_step = 0.005;
  std::vector<double> bias_window{0.0, 0.0};  ///< empty window: no bias removal
};

MethodConfig method_config(const Options& o) {
  MethodConfig m;
  if (o.method == "vote") {
    m.method = Method::vote;
  } else if (o.method == "ls") {
    m.method = Method::least_squares;
  } else {
    m.method = Method::ransac;
  }
  m.range_deg = o.range_deg;
  m.bin_deg = o.bin_deg;
  m.stride = o.stride;
  m.estimator.model = o.model == "perspective" ? MotionModel::perspective : MotionModel::longuet_higgins;
  m.estimator.threads = o.threads;
  m.ransac.iterations = o.ransac_iterations;
  m.ransac.inlier_threshold = o.ransac_threshold;
  m.ransac.seed = o.seed;
  return m;
}

EvalOptions eval_options(const Options& o) {
  if (o.timing_repeats < 1) throw ConfigError("--timing-repeats must be >= 1");
  return EvalOptions{o.no_timing ? 1 : o.timing_repeats};
}

CameraIntrinsics read_camera(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const CameraIntrinsics k = scene_from_config(in).intrinsics;
  if (!k.valid()) throw ConfigError(path.string() + ": invalid camera intrinsics");
  return k;
}

fs::path require_input(const Options& o, const std::string& what) {
  if (o.input.empty()) throw ConfigError("--input is required for " + what);
  const fs::path p(o.input);
  if (!fs::exists(p)) throw DataError("input " + p.string() + " does not exist");
  return p;
}

fs::path output_dir(const Options& o) {
  const fs::path dir(o.output);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

void write_manifest(const CLI::App& app, const fs::path& dir) {
  std::ofstream out = open_output(dir / "run_config.ini");
  out << app.config_to_str(true, false);
}

Dataset load_dataset(const std::vector<SequenceDir>& seqs, QuaternionConvention convention, bool with_truth) {
  Dataset data;
  for (const auto& s : seqs) {
    EvalSequence seq{s.name, {}};
    std::vector<Matrix3<double>> truth;
    if (with_truth) {
      const fs::path gt = s.dir / "ground_truth.csv";
      if (!fs::exists(gt)) throw DataError("sequence " + s.name + " has no ground_truth.csv");
      truth = read_ground_truth_csv(gt, convention);
      if (truth.size() != s.flows.size()) {
        throw DataError("sequence " + s.name + ": " + std::to_string(s.flows.size()) + " flow files but " +
                        std::to_string(truth.size()) + " ground-truth rows");
      }
    }
    for (std::size_t j = 0; j < s.flows.size(); ++j) {
      EvalFrame frame;
      frame.raster = read_flow(s.flows[j]);
      frame.intrinsics = intrinsics_for_raster(s.camera, frame.raster);
      if (with_truth) frame.ground_truth = truth[j];
      seq.frames.push_back(std::move(frame));
    }
    data.push_back(std::move(seq));
  }
  return data;
}

QuaternionConvention convention_of(const Options& o) {
  return o.convention == "jpl" ? QuaternionConvention::jpl : QuaternionConvention::hamilton;
}

void strip_timing(std::vector<FrameRecord>& records) {
  for (auto& r : records) r.time_s = 0.0;
}

// ---------------------------------------------------------------- estimate

int cmd_estimate(const CLI::App& app, const Options& o, std::ostream& out) {
  const auto seqs = scan_dataset(require_input(o, "estimate"));
  if (seqs.size() != 1) throw DataError("estimate takes a single sequence directory");
  const SequenceDir& seq = seqs.front();
  const MethodConfig config = method_config(o);
  const BinGrid grid = BinGrid::from_degrees(o.range_deg, o.bin_deg);
  const fs::path dir = output_dir(o);

  std::ofstream csv = open_output(dir / "rotations.csv");
  csv << "frame,file,a_deg,b_deg,c_deg,angle_deg,inlier_fraction,time_s\n";
  constexpr int kHistogramBins = 20;
  std::array<std::size_t, kHistogramBins> histogram{};
  for (std::size_t j = 0; j < seq.flows.size(); ++j) {
    const FlowRaster raster = read_flow(seq.flows[j]);
    const FlowField field = sample_field(raster, intrinsics_for_raster(seq.camera, raster), o.stride);
    RotationVec<double> r;
    double inlier_fraction = 0.0;
    const auto start = std::chrono::steady_clock::now();
    if (config.method == Method::vote) {
      const EstimateResult e = estimate_rotation(field, grid, config.estimator);
      r = e.rotation;
      inlier_fraction = e.inlier_fraction;
    } else {
      r = config.method == Method::least_squares ? ls_rotation(field).rotation
                                                 : ransac_rotation(field, config.ransac).rotation;
      const auto finite = static_cast<double>(
          std::count_if(field.samples.begin(), field.samples.end(), [](const FlowSample& s) { return s.finite(); }));
      inlier_fraction =
          finite > 0 ? static_cast<double>(count_inliers(field, r, config.ransac.inlier_threshold)) / finite : 0.0;
    }
    const double elapsed =
        o.no_timing ? 0.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const RotationVec<double> deg = r * rad_to_deg(1.0);
    csv << j << ',' << seq.flows[j].filename().string() << ',' << deg.x() << ',' << deg.y() << ',' << deg.z()
        << ',' << deg.norm() << ',' << inlier_fraction << ',' << elapsed << '\n';
    const int bin = std::min(kHistogramBins - 1, static_cast<int>(inlier_fraction * kHistogramBins));
    ++histogram[static_cast<std::size_t>(bin)];
  }

  std::ofstream hist = open_output(dir / "inlier_histogram.csv");
  hist << "fraction_lo,fraction_hi,frames\n";
  for (int b = 0; b < kHistogramBins; ++b) {
    hist << static_cast<double>(b) / kHistogramBins << ',' << static_cast<double>(b + 1) / kHistogramBins << ','
         << histogram[static_cast<std::size_t>(b)] << '\n';
  }
  write_manifest(app, dir);
  out << "estimated " << seq.flows.size() << " frames -> " << (dir / "rotations.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval

nlohmann::json summary_json(const EvalResult& r, const std::string& label, bool no_timing) {
  nlohmann::json j;
  j["config"] = label;
  j["aae_deg"] = r.aae_deg;
  j["mean_time_s"] = no_timing ? 0.0 : r.mean_time_s;
  j["frames"] = r.records.size();
  j["sequences"] = nlohmann::json::array();
  for (const auto& s : r.sequences) {
    j["sequences"].push_back({{"sequence", s.sequence},
                              {"frames", s.errors_deg.size()},
                              {"aae_deg", s.aae_deg},
                              {"standard_error_deg", s.standard_error_deg}});
  }
  return j;
}

int cmd_eval(const CLI::App& app, const Options& o, std::ostream& out) {
  const Dataset data = load_dataset(scan_dataset(require_input(o, "eval")), convention_of(o), true);
  const MethodConfig config = method_config(o);
  EvalResult r = evaluate(data, config, eval_options(o));
  if (o.no_timing) strip_timing(r.records);
  const fs::path dir = output_dir(o);
  {
    std::ofstream csv = open_output(dir / "eval.csv");
    write_records_csv(csv, r.records);
  }
  {
    std::ofstream json = open_output(dir / "summary.json");
    json << summary_json(r, config.label(), o.no_timing).dump(2) << '\n';
  }
  write_manifest(app, dir);
  out << config.label() << " AAE " << r.aae_deg << " deg over " << r.records.size() << " frames\n";
  return kExitOk;
}

// ---------------------------------------------------------------- sweeps

int finish_sweep(const CLI::App& app, const Options& o, SweepResult& sweep, const std::string& name,
                 std::ostream& out) {
  if (o.no_timing) {
    strip_timing(sweep.records);
    for (auto& row : sweep.rows) row.mean_time_s = 0.0;
  }
  const fs::path dir = output_dir(o);
  {
    std::ofstream csv = open_output(dir / (name + ".csv"));
    write_sweep_csv(csv, name == "sweep_bin" ? "bin_deg" : "stride", sweep.rows);
  }
  {
    std::ofstream csv = open_output(dir / (name + "_frames.csv"));
    write_records_csv(csv, sweep.records);
  }
  write_manifest(app, dir);
  for (const auto& row : sweep.rows) out << row.parameter << ": AAE " << row.aae_deg << " deg\n";
  return kExitOk;
}

int cmd_sweep_bin(const CLI::App& app, const Options& o, std::ostream& out) {
  const Dataset data = load_dataset(scan_dataset(require_input(o, "sweep-bin")), convention_of(o), true);
  MethodConfig config = method_config(o);
  if (config.method != Method::vote) throw ConfigError("sweep-bin applies to the vote method only");
  SweepResult sweep = sweep_bin_size(data, o.bins, config, eval_options(o));
  return finish_sweep(app, o, sweep, "sweep_bin", out);
}

int cmd_sweep_stride(const CLI::App& app, const Options& o, std::ostream& out) {
  const Dataset data = load_dataset(scan_dataset(require_input(o, "sweep-stride")), convention_of(o), true);
  SweepResult sweep = sweep_stride(data, o.strides, method_config(o), eval_options(o));
  return finish_sweep(app, o, sweep, "sweep_stride", out);
}

// ---------------------------------------------------------------- synth

int cmd_synth(const CLI::App& app, const Options& o, std::ostream& out) {
  if (o.frames < 1) throw ConfigError("--frames must be >= 1");
  if (!(o.max_rotation_deg >= 0.0)) throw ConfigError("--max-rotation-deg must be >= 0");
  SceneSpec base;
  if (!o.scene.empty()) {
    std::ifstream in(o.scene);
    if (!in) throw DataError("cannot open scene file " + o.scene);
    base = scene_from_config(in);
  }
  const fs::path dir = output_dir(o);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> component(-deg_to_rad(o.max_rotation_deg), deg_to_rad(o.max_rotation_deg));
  std::vector<Matrix3<double>> truth;
  for (int j = 0; j < o.frames; ++j) {
    SceneSpec spec = base;
    if (o.max_rotation_deg > 0.0) spec.rotation = RotationVec<double>(component(rng), component(rng), component(rng));
    const std::uint64_t frame_seed = rng();
    std::ostringstream name;
    name << "frame_" << std::setw(4) << std::setfill('0') << j << ".flo";
    write_flow(dir / name.str(), generate_raster(spec, frame_seed));
    truth.push_back(so3_exp<double>(spec.rotation));
  }
  {
    std::ofstream gt = open_output(dir / "ground_truth.csv");
    write_ground_truth_csv(gt, truth);
  }
  {
    std::ofstream cam = open_output(dir / "camera.ini");
    cam << std::setprecision(17) << "focal = " << base.intrinsics.f << "\ncx = " << base.intrinsics.cx
        << "\ncy = " << base.intrinsics.cy << "\nwidth = " << base.intrinsics.width
        << "\nheight = " << base.intrinsics.height << '\n';
  }
  {
    std::ofstream scene = open_output(dir / "scene.ini");
    scene << scene_to_config(base);
  }
  write_manifest(app, dir);
  out << "wrote " << o.frames << " frames to " << dir.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- gyro-gt

int cmd_gyro_gt(const CLI::App& app, const Options& o, std::ostream& out) {
  if (o.gyro.empty() || o.frame_times.empty()) throw ConfigError("gyro-gt needs --gyro and --frame-times");
  GyroSeries gyro = read_gyro_csv(fs::path(o.gyro));
  if (o.bias_window.size() != 2) throw ConfigError("--bias-window takes two times");
  if (o.bias_window[0] != o.bias_window[1]) {
    gyro = remove_constant_bias(gyro, o.bias_window[0], o.bias_window[1]);
  }
  std::vector<double> times = read_frame_times_csv(fs::path(o.frame_times));

  nlohmann::json summary;
  Matrix3<double> extrinsic = so3_exp<double>(
      Vector3<double>(o.extrinsic_deg[0], o.extrinsic_deg[1], o.extrinsic_deg[2]) * deg_to_rad(1.0));
  if (!o.reference.empty()) {
    // Reference rates are in the camera frame and clock; frame times follow
    // the reference clock.
    const GyroSeries ref = read_gyro_csv(fs::path(o.reference));
    const double offset = sync_time_offset(ref, gyro, o.sync_search, o.sync_step);
    std::vector<Vector3<double>> sensor;
    std::vector<Vector3<double>> camera;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double t = ref.timestamps[i] + offset;
      if (t < gyro.begin_time() || t > gyro.end_time()) continue;
      sensor.push_back(gyro.rate_at(t));
      camera.push_back(ref.rates[i]);
    }
    extrinsic = kabsch_align(sensor, camera);
    for (double& t : times) t += offset;
    summary["time_offset_s"] = offset;
  }
  std::vector<Matrix3<double>> track = build_ground_truth(gyro, times, extrinsic);
  if (convention_of(o) == QuaternionConvention::jpl) {
    for (auto& r : track) r.transposeInPlace();
  }
  const fs::path dir = output_dir(o);
  {
    std::ofstream csv = open_output(dir / "ground_truth.csv");
    write_ground_truth_csv(csv, track);
  }
  const Vector3<double> e = so3_log<double>(extrinsic) * rad_to_deg(1.0);
  summary["extrinsic_deg"] = {e.x(), e.y(), e.z()};
  summary["frames"] = track.size();
  {
    std::ofstream json = open_output(dir / "summary.json");
    json << summary.dump(2) << '\n';
  }
  write_manifest(app, dir);
  out << "wrote " << track.size() << " ground-truth rotations\n";
  return kExitOk;
}

void add_shared_options(CLI::App& app, Options& o) {
  app.add_option("--input,-i", o.input, "Sequence directory, or a directory of sequences");
  app.add_option("--output,-o", o.output, "Output directory")->capture_default_str();
  app.add_option("--range-deg", o.range_deg, "Half-width of the rotation search cube (deg)")->capture_default_str();
  app.add_option("--bin-deg", o.bin_deg, "Bin size (deg)")->capture_default_str();
  app.add_option("--model", o.model, "Motion model")
      ->check(CLI::IsMember({"lh", "perspective"}))
      ->capture_default_str();
  app.add_option("--stride", o.stride, "Flow sampling stride (pixels)")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads, 0 = all cores")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for RANSAC and synthetic data")->capture_default_str();
  app.add_option("--method", o.method, "Estimator")
      ->check(CLI::IsMember({"vote", "ls", "ransac"}))
      ->capture_default_str();
  app.add_option("--ransac-iterations", o.ransac_iterations)->capture_default_str();
  app.add_option("--ransac-threshold", o.ransac_threshold, "Inlier threshold (pixels)")->capture_default_str();
  app.add_flag("--no-timing", o.no_timing, "Write zeros in time columns (byte-reproducible output)");
  app.add_option("--timing-repeats", o.timing_repeats, "Runs per frame, median time reported")
      ->capture_default_str();
  app.add_option("--convention", o.convention, "Ground-truth quaternion convention")
      ->check(CLI::IsMember({"hamilton", "jpl"}))
      ->capture_default_str();
}

}  // namespace

SequenceDir scan_sequence(const fs::path& dir) {
  SequenceDir s;
  s.dir = dir;
  s.name = dir.filename().string();
  if (s.name.empty() || s.name == ".") s.name = fs::absolute(dir).lexically_normal().parent_path().filename().string();
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".flo") s.flows.push_back(entry.path());
  }
  std::sort(s.flows.begin(), s.flows.end());
  if (s.flows.empty()) throw DataError(dir.string() + " contains no .flo files");
  fs::path camera = dir / "camera.ini";
  if (!fs::exists(camera)) camera = dir.parent_path() / "camera.ini";
  if (!fs::exists(camera)) throw DataError("no camera.ini in " + dir.string() + " or its parent");
  s.camera = read_camera(camera);
  return s;
}

std::vector<SequenceDir> scan_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError(root.string() + " is not a directory");
  auto has_flows = [](const fs::path& d) {
    for (const auto& entry : fs::directory_iterator(d)) {
      if (entry.is_regular_file() && entry.path().extension() == ".flo") return true;
    }
    return false;
  };
  if (has_flows(root)) return {scan_sequence(root)};
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && has_flows(entry.path())) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw DataError(root.string() + " holds no sequence with .flo files");
  std::vector<SequenceDir> out;
  for (const auto& d : dirs) out.push_back(scan_sequence(d));
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Frame-to-frame camera rotation from optical flow by voting", "rotvote"};
  app.set_config("--config", "", "Read options from a key = value file");
  app.require_subcommand(1);
  app.fallthrough();
  add_shared_options(app, o);

  auto* estimate = app.add_subcommand("estimate", "Per-frame rotations of one sequence");
  auto* eval = app.add_subcommand("eval", "AAE against ground_truth.csv");
  auto* sweep_bin = app.add_subcommand("sweep-bin", "AAE and time per bin size");
  sweep_bin->add_option("--bins", o.bins, "Bin sizes (deg)")->delimiter(',')->capture_default_str();
  auto* sweep_stride = app.add_subcommand("sweep-stride", "AAE and time per sampling stride");
  sweep_stride->add_option("--strides", o.strides, "Strides (pixels)")->delimiter(',')->capture_default_str();
  auto* synth = app.add_subcommand("synth", "Write a synthetic sequence directory");
  synth->add_option("--scene", o.scene, "Scene config file");
  synth->add_option("--frames", o.frames)->capture_default_str();
  synth->add_option("--max-rotation-deg", o.max_rotation_deg,
                    "Draw each frame's rotation uniformly from this cube; 0 keeps the scene rotation")
      ->capture_default_str();
  auto* gyro_gt = app.add_subcommand("gyro-gt", "Ground-truth rotations from a gyro log");
  gyro_gt->add_option("--gyro", o.gyro, "Gyro CSV (timestamp_s,wx,wy,wz)");
  gyro_gt->add_option("--frame-times", o.frame_times, "Frame time CSV (frame,t)");
  gyro_gt->add_option("--reference", o.reference,
                      "Camera-frame gyro CSV; sets the time offset and the extrinsic");
  gyro_gt->add_option("--extrinsic-deg", o.extrinsic_deg, "Sensor-to-camera rotation, axis-angle (deg)")
      ->expected(3)
      ->capture_default_str();
  gyro_gt->add_option("--sync-search", o.sync_search, "Offset search half-width (s)")->capture_default_str();
  gyro_gt->add_option("--sync-step", o.sync_step, "Offset grid step (s)")->capture_default_str();
  gyro_gt->add_option("--bias-window", o.bias_window, "Stationary window t0 t1 for bias removal")
      ->expected(2)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(app, o, out);
    if (eval->parsed()) return cmd_eval(app, o, out);
    if (sweep_bin->parsed()) return cmd_sweep_bin(app, o, out);
    if (sweep_stride->parsed()) return cmd_sweep_stride(app, o, out);
    if (synth->parsed()) return cmd_synth(app, o, out);
    if (gyro_gt->parsed()) return cmd_gyro_gt(app, o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"rotvote"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace rotvote::cli
