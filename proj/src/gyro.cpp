#include "rotvote/gyro.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>

#include <Eigen/SVD>

#include "csv.hpp"
#include "rotvote/errors.hpp"

namespace rotvote {

void GyroSeries::validate() const {
  if (timestamps.size() != rates.size()) throw DataError("gyro series: timestamp/rate count mismatch");
  if (timestamps.size() < 2) throw DataError("gyro series needs at least two samples");
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (!std::isfinite(timestamps[i]) || !rates[i].allFinite()) {
      throw DataError("gyro series: non-finite value at sample " + std::to_string(i));
    }
    if (i > 0 && !(timestamps[i] > timestamps[i - 1])) {
      throw DataError("gyro series: timestamps not strictly increasing at sample " + std::to_string(i));
    }
  }
}

Vector3<double> GyroSeries::rate_at(double t) const {
  const auto it = std::upper_bound(timestamps.begin(), timestamps.end(), t);
  if (it == timestamps.begin()) return rates.front();
  if (it == timestamps.end()) return rates.back();
  const auto hi = static_cast<std::size_t>(it - timestamps.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - timestamps[lo]) / (timestamps[hi] - timestamps[lo]);
  return (1.0 - w) * rates[lo] + w * rates[hi];
}

Matrix3<double> integrate_gyro(const GyroSeries& g, double t0, double t1) {
  if (g.size() < 2) throw RangeError("integrate_gyro: series too short");
  if (!(t0 < t1)) throw RangeError("integrate_gyro: empty interval");
  if (t0 < g.begin_time() || t1 > g.end_time()) {
    throw RangeError("integrate_gyro: [" + std::to_string(t0) + ", " + std::to_string(t1) +
                     "] outside the gyro series [" + std::to_string(g.begin_time()) + ", " +
                     std::to_string(g.end_time()) + "]");
  }
  Matrix3<double> r = Matrix3<double>::Identity();
  auto it = std::upper_bound(g.timestamps.begin(), g.timestamps.end(), t0);
  double a = t0;
  Vector3<double> wa = g.rate_at(t0);
  while (a < t1) {
    const double b = (it != g.timestamps.end() && *it < t1) ? *it : t1;
    const Vector3<double> wb =
        (b == t1) ? g.rate_at(t1) : g.rates[static_cast<std::size_t>(it - g.timestamps.begin())];
    const double h = b - a;
    // second Magnus term for a linearly varying rate
    r = r * so3_exp<double>(0.5 * (wa + wb) * h + (h * h / 12.0) * wa.cross(wb));
    a = b;
    wa = wb;
    if (it != g.timestamps.end()) ++it;
  }
  return r;
}

Matrix3<double> kabsch_align(std::span<const Vector3<double>> a, std::span<const Vector3<double>> b) {
  if (a.size() != b.size()) throw DegenerateInput("kabsch_align: input sizes differ");
  if (a.size() < 3) throw DegenerateInput("kabsch_align: need at least 3 vector pairs");
  Matrix3<double> h = Matrix3<double>::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) h += a[i] * b[i].transpose();
  const Eigen::JacobiSVD<Matrix3<double>> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector3<double> sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) {
    throw DegenerateInput("kabsch_align: vectors are collinear, rotation is not determined");
  }
  const Matrix3<double> u = svd.matrixU();
  const Matrix3<double> v = svd.matrixV();
  Vector3<double> d(1.0, 1.0, (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  return v * d.asDiagonal() * u.transpose();
}

namespace {

/// Mean squared rate-magnitude difference between a(t) and b(t + offset),
/// NaN when the overlap holds fewer than three samples of `a`.
double sync_objective(const GyroSeries& a, const GyroSeries& b, double offset) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double tb = a.timestamps[i] + offset;
    if (tb < b.begin_time() || tb > b.end_time()) continue;
    const double diff = a.rates[i].norm() - b.rate_at(tb).norm();
    acc += diff * diff;
    ++n;
  }
  return n >= 3 ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double sync_time_offset(const GyroSeries& a, const GyroSeries& b, double search, double step) {
  if (!(search >= 0.0) || !(step > 0.0)) throw ConfigError("sync_time_offset: need search >= 0 and step > 0");
  a.validate();
  b.validate();
  const auto half = static_cast<long>(std::floor(search / step + 1e-9));
  std::vector<double> cost;
  cost.reserve(static_cast<std::size_t>(2 * half + 1));
  long best = -1;
  for (long k = -half; k <= half; ++k) {
    const double j = sync_objective(a, b, static_cast<double>(k) * step);
    cost.push_back(j);
    const auto idx = static_cast<long>(cost.size()) - 1;
    if (!std::isnan(j) && (best < 0 || j < cost[static_cast<std::size_t>(best)])) best = idx;
  }
  if (best < 0) throw RangeError("sync_time_offset: the series do not overlap at any candidate offset");

  double offset = static_cast<double>(best - half) * step;
  if (best > 0 && best + 1 < static_cast<long>(cost.size())) {
    const double jm = cost[static_cast<std::size_t>(best - 1)];
    const double j0 = cost[static_cast<std::size_t>(best)];
    const double jp = cost[static_cast<std::size_t>(best + 1)];
    const double denom = jm - 2.0 * j0 + jp;
    if (!std::isnan(jm) && !std::isnan(jp) && denom > 0.0) offset += 0.5 * step * (jm - jp) / denom;
  }
  return offset;
}

GyroSeries shift_time(const GyroSeries& g, double offset) {
  GyroSeries out = g;
  for (double& t : out.timestamps) t += offset;
  return out;
}

GyroSeries remove_constant_bias(const GyroSeries& g, double t_begin, double t_end) {
  Vector3<double> sum = Vector3<double>::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.timestamps[i] >= t_begin && g.timestamps[i] <= t_end) {
      sum += g.rates[i];
      ++n;
    }
  }
  if (n == 0) throw RangeError("remove_constant_bias: no samples in the stationary window");
  const Vector3<double> bias = sum / static_cast<double>(n);
  GyroSeries out = g;
  for (auto& w : out.rates) w -= bias;
  return out;
}

std::vector<Matrix3<double>> build_ground_truth(const GyroSeries& g, std::span<const double> frame_times,
                                                const Matrix3<double>& extrinsic) {
  if (!is_rotation(extrinsic, 1e-6)) throw ConfigError("extrinsic is not a proper rotation");
  if (frame_times.size() < 2) throw DataError("need at least two frame times");
  std::vector<Matrix3<double>> track;
  track.reserve(frame_times.size() - 1);
  for (std::size_t t = 0; t + 1 < frame_times.size(); ++t) {
    track.push_back(extrinsic * integrate_gyro(g, frame_times[t], frame_times[t + 1]) * extrinsic.transpose());
  }
  return track;
}

// ---------------------------------------------------------------- files

GyroSeries read_gyro_csv(std::istream& in) {
  csv::expect_header(csv::header(in), {"timestamp_s", "wx", "wy", "wz"});
  GyroSeries g;
  csv::rows(in, 4, [&](const std::vector<std::string>& c, std::size_t line) {
    g.timestamps.push_back(csv::to_double(c[0], line));
    g.rates.emplace_back(csv::to_double(c[1], line), csv::to_double(c[2], line), csv::to_double(c[3], line));
  });
  g.validate();
  return g;
}

GyroSeries read_gyro_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open gyro log " + path.string());
  try {
    return read_gyro_csv(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_gyro_csv(std::ostream& out, const GyroSeries& g) {
  out << "timestamp_s,wx,wy,wz\n" << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out << g.timestamps[i] << ',' << g.rates[i].x() << ',' << g.rates[i].y() << ',' << g.rates[i].z() << '\n';
  }
}

std::vector<double> read_frame_times_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open frame-time file " + path.string());
  const auto cols = csv::header(in);
  const auto it = std::find_if(cols.begin(), cols.end(),
                               [](const std::string& c) { return c == "t" || c == "time_s" || c == "timestamp_s"; });
  if (it == cols.end()) throw DataError(path.string() + ": no 't' column in header");
  const auto col = static_cast<std::size_t>(it - cols.begin());
  std::vector<double> times;
  csv::rows(in, cols.size(), [&](const std::vector<std::string>& c, std::size_t line) {
    times.push_back(csv::to_double(c[col], line));
  });
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw DataError(path.string() + ": frame times not increasing");
  }
  return times;
}

std::vector<Matrix3<double>> read_ground_truth_csv(std::istream& in, QuaternionConvention convention) {
  csv::expect_header(csv::header(in), {"frame", "qw", "qx", "qy", "qz"});
  std::vector<Matrix3<double>> track;
  csv::rows(in, 5, [&](const std::vector<std::string>& c, std::size_t line) {
    const double frame = csv::to_double(c[0], line);
    if (frame != static_cast<double>(track.size())) {
      throw DataError("line " + std::to_string(line) + ": expected frame " + std::to_string(track.size()));
    }
    Eigen::Quaterniond q(csv::to_double(c[1], line), csv::to_double(c[2], line), csv::to_double(c[3], line),
                         csv::to_double(c[4], line));
    if (!(std::abs(q.norm() - 1.0) < 1e-3)) {
      throw DataError("line " + std::to_string(line) + ": quaternion is not unit length");
    }
    q.normalize();
    const Matrix3<double> r = q.toRotationMatrix();
    track.push_back(convention == QuaternionConvention::hamilton ? r : Matrix3<double>(r.transpose()));
  });
  return track;
}

std::vector<Matrix3<double>> read_ground_truth_csv(const std::filesystem::path& path,
                                                   QuaternionConvention convention) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground truth " + path.string());
  try {
    return read_ground_truth_csv(in, convention);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_ground_truth_csv(std::ostream& out, std::span<const Matrix3<double>> track) {
  out << "frame,qw,qx,qy,qz\n" << std::setprecision(17);
  for (std::size_t i = 0; i < track.size(); ++i) {
    Eigen::Quaterniond q(track[i]);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    out << i << ',' << q.w() << ',' << q.x() << ',' << q.y() << ',' << q.z() << '\n';
  }
}

}  // namespace rotvote
