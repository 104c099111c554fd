#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rotvote/baselines.hpp"
#include "rotvote/flow_field.hpp"
#include "rotvote/voting.hpp"

namespace rotvote {

/// Angle in degrees of est * gt^T; the cosine is clamped into [-1, 1].
double geodesic_angle_deg(const Matrix3<double>& est, const Matrix3<double>& gt);

/// Frame-weighted mean error over all frames of all sequences. Throws
/// DataError when there is no frame at all.
double aae(const std::vector<std::vector<double>>& errors_by_sequence);

/// Standard error of the per-frame errors (sample std / sqrt(n)).
double standard_error(std::span<const double> errors);

/// One frame: a dense flow raster, its intrinsics and the true forward rotation.
struct EvalFrame {
  FlowRaster raster;
  CameraIntrinsics intrinsics;
  Matrix3<double> ground_truth = Matrix3<double>::Identity();
};

struct EvalSequence {
  std::string name;
  std::vector<EvalFrame> frames;
};

using Dataset = std::vector<EvalSequence>;

enum class Method { vote, least_squares, ransac };

struct MethodConfig {
  Method method = Method::vote;
  double range_deg = 4.0;
  double bin_deg = 0.057;
  int stride = 15;
  EstimatorOptions estimator;
  RansacConfig ransac;

  /// Short identifier used in the `config` CSV column.
  std::string label() const;
};

/// Rotation estimate of one method on one field.
Matrix3<double> run_method(const FlowField& field, const MethodConfig& config);

/// Row of the per-frame CSV: config, sequence, frame, error_deg, time_s.
struct FrameRecord {
  std::string config;
  std::string sequence;
  std::size_t frame = 0;
  double error_deg = 0.0;
  double time_s = 0.0;
};

struct SequenceEval {
  std::string method;
  std::string sequence;
  std::vector<double> errors_deg;
  std::vector<double> times_s;
  double aae_deg = 0.0;
  double standard_error_deg = 0.0;
};

struct EvalOptions {
  /// Estimator runs per frame; the reported time is their median. The
  /// rotation comes from the first run.
  int timing_repeats = 3;
};

struct EvalResult {
  std::vector<SequenceEval> sequences;
  std::vector<FrameRecord> records;
  double aae_deg = 0.0;
  double mean_time_s = 0.0;
};

/// Runs `config` on every frame. Flow sampling (stride) is not timed.
EvalResult evaluate(const Dataset& data, const MethodConfig& config, const EvalOptions& options = {});

struct SweepRow {
  double parameter = 0.0;
  double aae_deg = 0.0;
  double mean_time_s = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<FrameRecord> records;
};

/// One evaluation per bin size (degrees), everything else from `base`.
SweepResult sweep_bin_size(const Dataset& data, std::span<const double> sizes_deg, const MethodConfig& base,
                           const EvalOptions& options = {});

/// One evaluation per sampling stride, everything else from `base`.
SweepResult sweep_stride(const Dataset& data, std::span<const int> strides, const MethodConfig& base,
                         const EvalOptions& options = {});

/// CSV with header `config,sequence,frame,error_deg,time_s`.
void write_records_csv(std::ostream& out, std::span<const FrameRecord> records);

/// CSV with header `<parameter_name>,aae_deg,mean_time_s`.
void write_sweep_csv(std::ostream& out, const std::string& parameter_name, std::span<const SweepRow> rows);

}  // namespace rotvote
