#include "rotvote/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace rotvote {

double geodesic_angle_deg(const Matrix3<double>& est, const Matrix3<double>& gt) {
  return rad_to_deg(rotation_angle<double>(est * gt.transpose()));
}

double aae(const std::vector<std::vector<double>>& errors_by_sequence) {
  double sum = 0.0;
  std::size_t frames = 0;
  for (const auto& seq : errors_by_sequence) {
    for (const double e : seq) sum += e;
    frames += seq.size();
  }
  if (frames == 0) throw DataError("aae: no frames to average");
  return sum / static_cast<double>(frames);
}

double standard_error(std::span<const double> errors) {
  if (errors.size() < 2) return 0.0;
  const double n = static_cast<double>(errors.size());
  const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double ss = 0.0;
  for (const double e : errors) ss += (e - mean) * (e - mean);
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

std::string MethodConfig::label() const {
  std::ostringstream os;
  switch (method) {
    case Method::vote:
      os << (estimator.model == MotionModel::perspective ? "vote-persp" : "vote-lh") << "_bin" << bin_deg
         << "_range" << range_deg;
      break;
    case Method::least_squares:
      os << "ls";
      break;
    case Method::ransac:
      os << "ransac_it" << ransac.iterations << "_thr" << ransac.inlier_threshold;
      break;
  }
  os << "_stride" << stride;
  return os.str();
}

Matrix3<double> run_method(const FlowField& field, const MethodConfig& config) {
  switch (config.method) {
    case Method::vote: {
      const BinGrid grid = BinGrid::from_degrees(config.range_deg, config.bin_deg);
      return so3_exp<double>(estimate_rotation(field, grid, config.estimator).rotation);
    }
    case Method::least_squares:
      return so3_exp<double>(ls_rotation(field).rotation);
    case Method::ransac:
      return so3_exp<double>(ransac_rotation(field, config.ransac).rotation);
  }
  return Matrix3<double>::Identity();
}

EvalResult evaluate(const Dataset& data, const MethodConfig& config, const EvalOptions& options) {
  const int repeats = std::max(1, options.timing_repeats);
  EvalResult result;
  std::vector<std::vector<double>> errors;
  double total_time = 0.0;
  std::size_t frames = 0;
  const std::string label = config.label();
  for (const auto& seq : data) {
    SequenceEval se{label, seq.name, {}, {}, 0.0, 0.0};
    for (std::size_t j = 0; j < seq.frames.size(); ++j) {
      const EvalFrame& frame = seq.frames[j];
      const FlowField field = sample_field(frame.raster, frame.intrinsics, config.stride);
      Matrix3<double> estimate;
      std::vector<double> times;
      for (int rep = 0; rep < repeats; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        Matrix3<double> r = run_method(field, config);
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        if (rep == 0) estimate = r;
      }
      std::nth_element(times.begin(), times.begin() + static_cast<long>(times.size() / 2), times.end());
      const double t = times[times.size() / 2];
      const double err = geodesic_angle_deg(estimate, frame.ground_truth);
      se.errors_deg.push_back(err);
      se.times_s.push_back(t);
      result.records.push_back({label, seq.name, j, err, t});
      total_time += t;
      ++frames;
    }
    se.aae_deg = se.errors_deg.empty() ? 0.0 : aae({se.errors_deg});
    se.standard_error_deg = standard_error(se.errors_deg);
    errors.push_back(se.errors_deg);
    result.sequences.push_back(std::move(se));
  }
  result.aae_deg = aae(errors);
  result.mean_time_s = total_time / static_cast<double>(frames);
  return result;
}

SweepResult sweep_bin_size(const Dataset& data, std::span<const double> sizes_deg, const MethodConfig& base,
                           const EvalOptions& options) {
  SweepResult out;
  for (const double size : sizes_deg) {
    if (!(size > 0.0)) throw ConfigError("bin sizes must be positive");
    MethodConfig cfg = base;
    cfg.method = Method::vote;
    cfg.bin_deg = size;
    EvalResult r = evaluate(data, cfg, options);
    out.rows.push_back({size, r.aae_deg, r.mean_time_s});
    out.records.insert(out.records.end(), r.records.begin(), r.records.end());
  }
  return out;
}

SweepResult sweep_stride(const Dataset& data, std::span<const int> strides, const MethodConfig& base,
                         const EvalOptions& options) {
  SweepResult out;
  for (const int stride : strides) {
    if (stride < 1) throw ConfigError("strides must be >= 1");
    MethodConfig cfg = base;
    cfg.stride = stride;
    EvalResult r = evaluate(data, cfg, options);
    out.rows.push_back({static_cast<double>(stride), r.aae_deg, r.mean_time_s});
    out.records.insert(out.records.end(), r.records.begin(), r.records.end());
  }
  return out;
}

void write_records_csv(std::ostream& out, std::span<const FrameRecord> records) {
  out << "config,sequence,frame,error_deg,time_s\n" << std::setprecision(10);
  for (const auto& r : records) {
    out << r.config << ',' << r.sequence << ',' << r.frame << ',' << r.error_deg << ',' << r.time_s << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::string& parameter_name, std::span<const SweepRow> rows) {
  out << parameter_name << ",aae_deg,mean_time_s\n" << std::setprecision(10);
  for (const auto& r : rows) out << r.parameter << ',' << r.aae_deg << ',' << r.mean_time_s << '\n';
}

}  // namespace rotvote
