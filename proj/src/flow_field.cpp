#include "rotvote/flow_field.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace rotvote {

std::vector<Vector2<double>> regular_grid(int width, int height, int stride) {
  if (stride < 1) throw ConfigError("stride must be >= 1, got " + std::to_string(stride));
  std::vector<Vector2<double>> grid;
  const int offset = stride / 2;
  for (int row = offset; row < height; row += stride) {
    for (int col = offset; col < width; col += stride) grid.emplace_back(col, row);
  }
  return grid;
}

FlowField sample_field(const FlowRaster& raster, const CameraIntrinsics& k, int stride) {
  if (!k.valid()) throw ConfigError("invalid camera intrinsics");
  if (k.width != raster.width || k.height != raster.height) {
    throw ConfigError("intrinsics are for " + std::to_string(k.width) + "x" +
                      std::to_string(k.height) + " but the flow raster is " +
                      std::to_string(raster.width) + "x" + std::to_string(raster.height));
  }
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  FlowField field{k, {}};
  for (const auto& px : regular_grid(raster.width, raster.height, stride)) {
    const int col = static_cast<int>(px.x());
    const int row = static_cast<int>(px.y());
    const float u = raster.u(col, row);
    const float v = raster.v(col, row);
    FlowSample s{px.x() - k.cx, px.y() - k.cy, nan, nan};
    if (is_valid_flow(u, v)) {
      s.u = u;
      s.v = v;
    }
    field.samples.push_back(s);
  }
  return field;
}

CameraIntrinsics intrinsics_for_raster(const CameraIntrinsics& k, const FlowRaster& raster) {
  if (!k.valid()) throw ConfigError("invalid camera intrinsics");
  if (k.width == raster.width && k.height == raster.height) return k;
  const double sx = static_cast<double>(raster.width) / k.width;
  const double sy = static_cast<double>(raster.height) / k.height;
  if (std::abs(sx - sy) * std::max(k.width, k.height) > 1.0) {
    throw ConfigError("inconsistent intrinsics: camera is " + std::to_string(k.width) + "x" +
                      std::to_string(k.height) + ", flow raster is " +
                      std::to_string(raster.width) + "x" + std::to_string(raster.height) +
                      " (aspect ratios differ)");
  }
  CameraIntrinsics out = k.scaled(sx);
  out.width = raster.width;
  out.height = raster.height;
  return out;
}

}  // namespace rotvote
