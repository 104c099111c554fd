#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rotvote/flow_field.hpp"
#include "rotvote/geometry.hpp"

namespace rotvote {

/// Rotational flow at principal-point-relative (x, y) for per-frame rotation
/// (A, B, C), Longuet-Higgins model.
Vector2<double> rotational_flow(double x, double y, double f, const RotationVec<double>& r);

/// Translational flow for translation (U, V, W) and depth Z.
Vector2<double> translational_flow(double x, double y, double f, const Vector3<double>& t, double depth);

struct ConstantDepth {
  double z = 10.0;
};

/// Z = z0 + gx * x + gy * y in principal-point-relative pixels.
struct PlanarRampDepth {
  double z0 = 10.0;
  double gx = 0.0;
  double gy = 0.0;
};

/// Near plane on image rows >= horizon_row (absolute), far background above.
struct TwoLayerDepth {
  double near_z = 2.0;
  double far_z = 1000.0;
  int horizon_row = 135;
};

/// Explicit per-sample depths, in the order of the sample grid.
struct DepthGrid {
  std::vector<double> z;
};

using DepthModel = std::variant<ConstantDepth, PlanarRampDepth, TwoLayerDepth, DepthGrid>;

/// Rectangle [x0, x1) x [y0, y1) in absolute pixels whose flow gets a
/// constant extra offset.
struct Mover {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  Vector2<double> offset = Vector2<double>::Zero();

  bool contains(double col, double row) const { return col >= x0 && col < x1 && row >= y0 && row < y1; }
};

struct SceneSpec {
  CameraIntrinsics intrinsics{400.0, 240.0, 135.0, 480, 270};
  int stride = 15;  ///< sample grid, see regular_grid()
  RotationVec<double> rotation = RotationVec<double>::Zero();
  Vector3<double> translation = Vector3<double>::Zero();  ///< depth units per frame
  DepthModel depth = ConstantDepth{};
  std::vector<Mover> movers;
  double noise_sigma = 0.0;  ///< pixels, isotropic Gaussian on (u, v)

  /// Absolute pixel positions of the samples.
  std::vector<Vector2<double>> positions() const;
};

struct SyntheticFrame {
  FlowField field;
  RotationVec<double> truth;
};

/// Depth at sample `index` (absolute pixel position `px`).
double depth_at(const DepthModel& model, const CameraIntrinsics& k, const Vector2<double>& px,
                std::size_t index);

/// Full-model flow field for `spec`. Deterministic in (spec, seed). Throws
/// ConfigError for nonpositive depth or movers outside the image.
SyntheticFrame generate_field(const SceneSpec& spec, std::uint64_t seed);

/// Same scene sampled at every pixel and packed as a raster.
FlowRaster generate_raster(const SceneSpec& spec, std::uint64_t seed);

/// Scene as key-value config text (the CLI config format). DepthGrid scenes
/// cannot be written.
std::string scene_to_config(const SceneSpec& spec);
SceneSpec scene_from_config(std::istream& in);

}  // namespace rotvote
