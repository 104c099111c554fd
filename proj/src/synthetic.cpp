#include "rotvote/synthetic.hpp"

#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

namespace rotvote {

Vector2<double> rotational_flow(double x, double y, double f, const RotationVec<double>& r) {
  const double a = r.x();
  const double b = r.y();
  const double c = r.z();
  return {a * x * y / f - b * (f * f + x * x) / f + c * y,
          a * (f * f + y * y) / f - b * x * y / f - c * x};
}

Vector2<double> translational_flow(double x, double y, double f, const Vector3<double>& t, double depth) {
  return {(-f * t.x() + x * t.z()) / depth, (-f * t.y() + y * t.z()) / depth};
}

std::vector<Vector2<double>> SceneSpec::positions() const {
  return regular_grid(intrinsics.width, intrinsics.height, stride);
}

double depth_at(const DepthModel& model, const CameraIntrinsics& k, const Vector2<double>& px,
                std::size_t index) {
  struct Visitor {
    const CameraIntrinsics& k;
    const Vector2<double>& px;
    std::size_t index;

    double operator()(const ConstantDepth& d) const { return d.z; }
    double operator()(const PlanarRampDepth& d) const {
      return d.z0 + d.gx * (px.x() - k.cx) + d.gy * (px.y() - k.cy);
    }
    double operator()(const TwoLayerDepth& d) const {
      return px.y() >= d.horizon_row ? d.near_z : d.far_z;
    }
    double operator()(const DepthGrid& d) const {
      if (index >= d.z.size()) throw ConfigError("depth grid smaller than the sample grid");
      return d.z[index];
    }
  };
  return std::visit(Visitor{k, px, index}, model);
}

SyntheticFrame generate_field(const SceneSpec& spec, std::uint64_t seed) {
  const CameraIntrinsics& k = spec.intrinsics;
  if (!k.valid()) throw ConfigError("scene has invalid intrinsics");
  if (spec.noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  for (const auto& m : spec.movers) {
    if (m.x0 < 0 || m.y0 < 0 || m.x1 > k.width || m.y1 > k.height || m.x0 >= m.x1 || m.y0 >= m.y1) {
      throw ConfigError("mover region outside the image or empty");
    }
  }

  const auto grid = spec.positions();
  if (const auto* g = std::get_if<DepthGrid>(&spec.depth); g && g->z.size() != grid.size()) {
    throw ConfigError("depth grid has " + std::to_string(g->z.size()) + " entries for " +
                      std::to_string(grid.size()) + " samples");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const bool translating = spec.translation.squaredNorm() > 0.0;

  SyntheticFrame frame{{k, {}}, spec.rotation};
  frame.field.samples.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector2<double>& px = grid[i];
    const double x = px.x() - k.cx;
    const double y = px.y() - k.cy;
    const double z = depth_at(spec.depth, k, px, i);
    if (!(z > 0.0)) {
      throw ConfigError("nonpositive depth " + std::to_string(z) + " at pixel (" +
                        std::to_string(px.x()) + ", " + std::to_string(px.y()) + ")");
    }
    Vector2<double> flow = rotational_flow(x, y, k.f, spec.rotation);
    if (translating) flow += translational_flow(x, y, k.f, spec.translation, z);
    for (const auto& m : spec.movers) {
      if (m.contains(px.x(), px.y())) flow += m.offset;
    }
    if (spec.noise_sigma > 0.0) {
      const double nu = noise(rng);
      const double nv = noise(rng);
      flow += spec.noise_sigma * Vector2<double>(nu, nv);
    }
    frame.field.samples.push_back({x, y, flow.x(), flow.y()});
  }
  return frame;
}

FlowRaster generate_raster(const SceneSpec& spec, std::uint64_t seed) {
  SceneSpec dense = spec;
  dense.stride = 1;
  const SyntheticFrame frame = generate_field(dense, seed);
  const CameraIntrinsics& k = spec.intrinsics;
  FlowRaster raster(k.width, k.height);
  for (const auto& s : frame.field.samples) {
    const int col = static_cast<int>(std::lround(s.x + k.cx));
    const int row = static_cast<int>(std::lround(s.y + k.cy));
    raster.u(col, row) = static_cast<float>(s.u);
    raster.v(col, row) = static_cast<float>(s.v);
  }
  return raster;
}

// ---------------------------------------------------------------- config

namespace {

std::string join3(const Vector3<double>& v) {
  std::ostringstream os;
  os.precision(17);
  os << v.x() << ' ' << v.y() << ' ' << v.z();
  return os.str();
}

double to_double(const CLI::ConfigItem& item, std::size_t i = 0) {
  if (item.inputs.size() <= i) throw ConfigError("scene config: missing value for '" + item.name + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(item.inputs[i], &used);
    if (used != item.inputs[i].size()) throw std::invalid_argument(item.inputs[i]);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("scene config: '" + item.name + "' expects numbers, got '" + item.inputs[i] + "'");
  }
}

void expect_count(const CLI::ConfigItem& item, std::size_t n) {
  if (item.inputs.size() != n) {
    throw ConfigError("scene config: '" + item.name + "' expects " + std::to_string(n) + " values");
  }
}

Vector3<double> to_vec3(const CLI::ConfigItem& item) {
  expect_count(item, 3);
  return {to_double(item, 0), to_double(item, 1), to_double(item, 2)};
}

}  // namespace

std::string scene_to_config(const SceneSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  const auto& k = spec.intrinsics;
  os << "focal = " << k.f << "\n"
     << "cx = " << k.cx << "\n"
     << "cy = " << k.cy << "\n"
     << "width = " << k.width << "\n"
     << "height = " << k.height << "\n"
     << "stride = " << spec.stride << "\n"
     << "rotation_deg = " << join3(spec.rotation * rad_to_deg(1.0)) << "\n"
     << "translation = " << join3(spec.translation) << "\n"
     << "noise_sigma = " << spec.noise_sigma << "\n";
  if (const auto* d = std::get_if<ConstantDepth>(&spec.depth)) {
    os << "depth = constant\n"
       << "depth_z = " << d->z << "\n";
  } else if (const auto* d = std::get_if<PlanarRampDepth>(&spec.depth)) {
    os << "depth = ramp\n"
       << "ramp = " << d->z0 << ' ' << d->gx << ' ' << d->gy << "\n";
  } else if (const auto* d = std::get_if<TwoLayerDepth>(&spec.depth)) {
    os << "depth = two-layer\n"
       << "near_z = " << d->near_z << "\n"
       << "far_z = " << d->far_z << "\n"
       << "horizon_row = " << d->horizon_row << "\n";
  } else {
    throw ConfigError("per-sample depth grids have no config representation");
  }
  for (const auto& m : spec.movers) {
    os << "mover = " << m.x0 << ' ' << m.y0 << ' ' << m.x1 << ' ' << m.y1 << ' ' << m.offset.x() << ' '
       << m.offset.y() << "\n";
  }
  return os.str();
}

SceneSpec scene_from_config(std::istream& in) {
  const auto items = CLI::ConfigINI().from_config(in);
  SceneSpec spec;
  std::string depth_kind = "constant";
  ConstantDepth constant;
  PlanarRampDepth ramp;
  TwoLayerDepth layers;
  for (const auto& item : items) {
    if (item.name == "--") continue;  // section terminator
    const std::string& key = item.name;
    if (key == "focal") {
      spec.intrinsics.f = to_double(item);
    } else if (key == "cx") {
      spec.intrinsics.cx = to_double(item);
    } else if (key == "cy") {
      spec.intrinsics.cy = to_double(item);
    } else if (key == "width") {
      spec.intrinsics.width = static_cast<int>(to_double(item));
    } else if (key == "height") {
      spec.intrinsics.height = static_cast<int>(to_double(item));
    } else if (key == "stride") {
      spec.stride = static_cast<int>(to_double(item));
    } else if (key == "rotation_deg") {
      spec.rotation = to_vec3(item) * deg_to_rad(1.0);
    } else if (key == "translation") {
      spec.translation = to_vec3(item);
    } else if (key == "noise_sigma") {
      spec.noise_sigma = to_double(item);
    } else if (key == "depth") {
      expect_count(item, 1);
      depth_kind = item.inputs[0];
    } else if (key == "depth_z") {
      constant.z = to_double(item);
    } else if (key == "ramp") {
      const auto v = to_vec3(item);
      ramp = {v.x(), v.y(), v.z()};
    } else if (key == "near_z") {
      layers.near_z = to_double(item);
    } else if (key == "far_z") {
      layers.far_z = to_double(item);
    } else if (key == "horizon_row") {
      layers.horizon_row = static_cast<int>(to_double(item));
    } else if (key == "mover") {
      // repeated keys arrive merged into one item
      if (item.inputs.empty() || item.inputs.size() % 6 != 0) {
        throw ConfigError("scene config: 'mover' expects 6 values per entry");
      }
      for (std::size_t j = 0; j < item.inputs.size(); j += 6) {
        Mover m;
        m.x0 = static_cast<int>(to_double(item, j));
        m.y0 = static_cast<int>(to_double(item, j + 1));
        m.x1 = static_cast<int>(to_double(item, j + 2));
        m.y1 = static_cast<int>(to_double(item, j + 3));
        m.offset = {to_double(item, j + 4), to_double(item, j + 5)};
        spec.movers.push_back(m);
      }
    } else {
      throw ConfigError("scene config: unknown key '" + key + "'");
    }
  }
  if (depth_kind == "constant") {
    spec.depth = constant;
  } else if (depth_kind == "ramp") {
    spec.depth = ramp;
  } else if (depth_kind == "two-layer") {
    spec.depth = layers;
  } else {
    throw ConfigError("scene config: unknown depth preset '" + depth_kind + "'");
  }
  return spec;
}

}  // namespace rotvote
