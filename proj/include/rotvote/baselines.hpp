#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rotvote/flow_field.hpp"

namespace rotvote {

struct LsResult {
  RotationVec<double> rotation;
  double rms_residual = 0.0;  ///< pixels, over the 2N flow components
};

/// Least-squares (A, B, C) over all finite samples of the rotational flow
/// equations, via the normal equations. Throws DegenerateInput when the
/// system is rank deficient.
LsResult ls_rotation(const FlowField& field);

/// Same, restricted to the samples at `indices`.
LsResult ls_rotation(const FlowField& field, std::span<const std::size_t> indices);

/// Euclidean distance in pixels between the observed flow and the flow
/// predicted by rotation `r`.
double flow_residual(const FlowSample& s, double f, const RotationVec<double>& r);

std::size_t count_inliers(const FlowField& field, const RotationVec<double>& r, double threshold);

struct RansacConfig {
  int iterations = 500;
  int sample_size = 2;
  double inlier_threshold = 1.0;  ///< pixels
  std::uint64_t seed = 0;
};

struct RansacResult {
  bool success = false;
  RotationVec<double> rotation = RotationVec<double>::Zero();
  std::vector<std::uint8_t> inlier_mask;
  std::size_t inlier_count = 0;
  int best_iteration = -1;
};

/// Hypothesize-and-verify around ls_rotation. The best hypothesis by inlier
/// count (earliest wins ties) is refit on its inliers. `success` is false
/// when no hypothesis reaches sample_size inliers.
RansacResult ransac_rotation(const FlowField& field, const RansacConfig& config);

}  // namespace rotvote
