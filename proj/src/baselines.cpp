#include "rotvote/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "rotvote/synthetic.hpp"

namespace rotvote {

namespace {

std::vector<std::size_t> finite_indices(const FlowField& field) {
  std::vector<std::size_t> idx;
  idx.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field.samples[i].finite()) idx.push_back(i);
  }
  return idx;
}

}  // namespace

LsResult ls_rotation(const FlowField& field, std::span<const std::size_t> indices) {
  const double f = field.intrinsics.f;
  if (!(f > 0.0)) throw ConfigError("focal length must be > 0");
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const std::size_t i : indices) {
    if (i >= field.size()) throw DataError("ls_rotation: sample index " + std::to_string(i) + " out of range");
    const FlowSample& s = field.samples[i];
    const auto [nu, nv] = lh_plane_normals(s.x, s.y, f);
    normal += nu * nu.transpose() + nv * nv.transpose();
    rhs += nu * s.u + nv * s.v;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
  const Eigen::Vector3d ev = eig.eigenvalues();
  if (!(ev.maxCoeff() > 0.0) || ev.minCoeff() <= 1e-12 * ev.maxCoeff()) {
    throw DegenerateInput("ls_rotation: rank-deficient system (" + std::to_string(indices.size()) +
                          " samples)");
  }
  LsResult out;
  out.rotation = normal.ldlt().solve(rhs);
  double sq = 0.0;
  for (const std::size_t i : indices) {
    const double r = flow_residual(field.samples[i], f, out.rotation);
    sq += r * r;
  }
  out.rms_residual = std::sqrt(sq / (2.0 * static_cast<double>(indices.size())));
  return out;
}

LsResult ls_rotation(const FlowField& field) {
  const auto idx = finite_indices(field);
  return ls_rotation(field, idx);
}

double flow_residual(const FlowSample& s, double f, const RotationVec<double>& r) {
  const Vector2<double> predicted = rotational_flow(s.x, s.y, f, r);
  return std::hypot(s.u - predicted.x(), s.v - predicted.y());
}

std::size_t count_inliers(const FlowField& field, const RotationVec<double>& r, double threshold) {
  std::size_t n = 0;
  for (const auto& s : field.samples) {
    if (s.finite() && flow_residual(s, field.intrinsics.f, r) <= threshold) ++n;
  }
  return n;
}

RansacResult ransac_rotation(const FlowField& field, const RansacConfig& config) {
  if (config.iterations < 1) throw ConfigError("RANSAC needs at least one iteration");
  if (config.sample_size < 2) throw ConfigError("RANSAC sample size must be >= 2");
  if (!(config.inlier_threshold > 0.0)) throw ConfigError("RANSAC threshold must be > 0");
  const auto pool = finite_indices(field);
  const auto k = static_cast<std::size_t>(config.sample_size);
  RansacResult result;
  if (pool.size() < k) {
    result.inlier_mask.assign(field.size(), 0);
    return result;
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> sample(k);
  for (int it = 0; it < config.iterations; ++it) {
    // k distinct pool entries, redrawing collisions.
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t candidate = 0;
      do {
        candidate = pool[pick(rng)];
      } while (std::find(sample.begin(), sample.begin() + static_cast<long>(j), candidate) !=
               sample.begin() + static_cast<long>(j));
      sample[j] = candidate;
    }
    RotationVec<double> hypothesis;
    try {
      hypothesis = ls_rotation(field, sample).rotation;
    } catch (const DegenerateInput&) {
      continue;
    }
    const std::size_t inliers = count_inliers(field, hypothesis, config.inlier_threshold);
    if (inliers > result.inlier_count) {
      result.inlier_count = inliers;
      result.rotation = hypothesis;
      result.best_iteration = it;
    }
  }

  if (result.inlier_count < k) {
    result.success = false;
    result.inlier_count = 0;
    result.inlier_mask.assign(field.size(), 0);
    return result;
  }

  std::vector<std::size_t> inliers;
  result.inlier_mask.assign(field.size(), 0);
  for (const std::size_t i : pool) {
    if (flow_residual(field.samples[i], field.intrinsics.f, result.rotation) <= config.inlier_threshold) {
      inliers.push_back(i);
      result.inlier_mask[i] = 1;
    }
  }
  try {
    result.rotation = ls_rotation(field, inliers).rotation;
  } catch (const DegenerateInput&) {
    // keep the hypothesis itself when the inlier set cannot be refit
  }
  result.success = true;
  return result;
}

}  // namespace rotvote
