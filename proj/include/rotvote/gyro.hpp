#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "rotvote/so3.hpp"

// Rotation convention for everything in this header: the rotation for an
// interval [t0, t1] is the orientation of the sensor (or camera) at t1
// expressed in its frame at t0, i.e. the product of body-rate increments
// exp(w dt) right-multiplied in time order. Consequently
//   integrate_gyro(t0, t2) == integrate_gyro(t0, t1) * integrate_gyro(t1, t2)
// and, for small motions, so3_log(R) ~ (A, B, C) of the flow model.

namespace rotvote {

struct GyroSeries {
  std::vector<double> timestamps;         ///< seconds, strictly increasing
  std::vector<Vector3<double>> rates;     ///< rad/s, sensor frame

  std::size_t size() const { return timestamps.size(); }
  double begin_time() const { return timestamps.front(); }
  double end_time() const { return timestamps.back(); }

  /// Throws DataError unless timestamps increase strictly and all values are finite.
  void validate() const;

  /// Rate at `t` by linear interpolation; t must lie within the series.
  Vector3<double> rate_at(double t) const;
};

/// Body-rate integration over [t0, t1]: trapezoidal rate on every sample
/// interval (partial intervals at the edges), exponential-map increments.
/// Throws RangeError when the interval is not inside the series.
Matrix3<double> integrate_gyro(const GyroSeries& g, double t0, double t1);

/// Proper rotation R minimizing sum |R a_i - b_i|^2 (no centering; the
/// inputs are rate vectors). Throws DegenerateInput for fewer than 3 pairs or
/// collinear inputs.
Matrix3<double> kabsch_align(std::span<const Vector3<double>> a, std::span<const Vector3<double>> b);

/// Offset d such that b(t + d) matches a(t): grid search over [-search, search]
/// with `step`, minimizing the mean squared difference of rate magnitudes
/// over the overlap, then a parabolic fit through the grid minimum and its
/// neighbours. Throws RangeError if no candidate overlaps.
double sync_time_offset(const GyroSeries& a, const GyroSeries& b, double search, double step);

/// Returns `g` with timestamps shifted by `offset` seconds.
GyroSeries shift_time(const GyroSeries& g, double offset);

/// Subtracts the mean rate over [t_begin, t_end] (a stationary window).
GyroSeries remove_constant_bias(const GyroSeries& g, double t_begin, double t_end);

/// Forward camera rotation for every consecutive frame pair:
/// entry t = E * integrate_gyro(frame_times[t], frame_times[t + 1]) * E^T,
/// where `extrinsic` E maps sensor-frame vectors to camera-frame vectors.
std::vector<Matrix3<double>> build_ground_truth(const GyroSeries& g, std::span<const double> frame_times,
                                                const Matrix3<double>& extrinsic);

// ---------------------------------------------------------------- files

/// CSV with header `timestamp_s,wx,wy,wz`.
GyroSeries read_gyro_csv(std::istream& in);
GyroSeries read_gyro_csv(const std::filesystem::path& path);
void write_gyro_csv(std::ostream& out, const GyroSeries& g);

/// CSV with header `frame,t` (or a single `t` column); returns the times.
std::vector<double> read_frame_times_csv(const std::filesystem::path& path);

enum class QuaternionConvention {
  hamilton,  ///< (w, x, y, z) Hamilton quaternion of the forward rotation
  jpl,       ///< JPL convention: same components describe the transposed rotation
};

/// CSV with header `frame,qw,qx,qy,qz`; frames must be 0, 1, 2, ...
std::vector<Matrix3<double>> read_ground_truth_csv(std::istream& in,
                                                   QuaternionConvention convention = QuaternionConvention::hamilton);
std::vector<Matrix3<double>> read_ground_truth_csv(const std::filesystem::path& path,
                                                   QuaternionConvention convention = QuaternionConvention::hamilton);
void write_ground_truth_csv(std::ostream& out, std::span<const Matrix3<double>> track);

}  // namespace rotvote
