#pragma once

#include <cstddef>
#include <vector>

#include "rotvote/geometry.hpp"

namespace rotvote {

/// A set of flow samples with the intrinsics they were measured under.
struct FlowField {
  CameraIntrinsics intrinsics;
  std::vector<FlowSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Dense two-band flow image, row-major, interleaved (u, v).
struct FlowRaster {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  FlowRaster() = default;
  FlowRaster(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 2, 0.0f) {}

  float& u(int col, int row) { return data[index(col, row)]; }
  float& v(int col, int row) { return data[index(col, row) + 1]; }
  float u(int col, int row) const { return data[index(col, row)]; }
  float v(int col, int row) const { return data[index(col, row) + 1]; }

 private:
  std::size_t index(int col, int row) const {
    return (static_cast<std::size_t>(row) * width + col) * 2;
  }
};

/// Flow values with a magnitude above this are "unknown" in the raster
/// convention, like NaN.
inline constexpr float kUnknownFlow = 1e9f;

inline bool is_valid_flow(float u, float v) {
  return std::isfinite(u) && std::isfinite(v) && std::abs(u) < kUnknownFlow &&
         std::abs(v) < kUnknownFlow;
}

/// Pixel positions (absolute) of the regular sampling grid with `stride`:
/// columns stride/2, stride/2 + stride, ... below width (rows likewise).
std::vector<Vector2<double>> regular_grid(int width, int height, int stride);

/// Samples `raster` on the regular grid with `stride`. Intrinsics must be at
/// the raster resolution. Invalid pixels are kept as NaN samples.
FlowField sample_field(const FlowRaster& raster, const CameraIntrinsics& k, int stride);

/// Reconciles intrinsics given at another resolution (e.g. capture) with a
/// raster, rescaling f, cx, cy. Throws ConfigError when the aspect ratios
/// disagree.
CameraIntrinsics intrinsics_for_raster(const CameraIntrinsics& k, const FlowRaster& raster);

}  // namespace rotvote
