#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rotvote/geometry.hpp"
#include "rotvote/synthetic.hpp"

using namespace rotvote;
using Vec2 = Vector2<double>;
using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;

namespace {

const CameraIntrinsics kCam{400.0, 240.0, 135.0, 480, 270};

}  // namespace

TEST_CASE("backproject") {
  SUBCASE("principal point is the optical axis") {
    const Vec3 r = backproject<double>(Vec2(kCam.cx, kCam.cy), kCam);
    CHECK((r - Vec3(0, 0, 1)).norm() < 1e-15);
  }
  SUBCASE("one focal length off-axis is a 45 degree ray") {
    const CameraIntrinsics k{500.0, 100.0, 50.0, 640, 480};
    const Vec3 r = backproject<double>(Vec2(600.0, 50.0), k);
    CHECK((r - Vec3(1.0 / std::sqrt(2.0), 0, 1.0 / std::sqrt(2.0))).norm() < 1e-15);
  }
  SUBCASE("normalization") {
    const CameraIntrinsics k{5.0, 10.0, 10.0, 20, 20};
    const Vec3 r = backproject<double>(Vec2(13.0, 14.0), k);
    CHECK((r - Vec3(3, 4, 5) / std::sqrt(50.0)).norm() < 1e-15);
  }
  SUBCASE("reprojection recovers the pixel") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> col(0.0, 480.0), row(0.0, 270.0);
    for (int i = 0; i < 1000; ++i) {
      const Vec2 px(col(rng), row(rng));
      const Vec3 r = backproject<double>(px, kCam);
      CHECK(std::abs(r.norm() - 1.0) < 1e-12);
      CHECK((project<double>(r, kCam) - px).norm() < 1e-9);
    }
  }
  SUBCASE("float instantiation") {
    const auto r = backproject<float>(Vector2<float>(240.0f, 135.0f), kCam);
    CHECK(r.z() == doctest::Approx(1.0f));
  }
}

TEST_CASE("rotation_from_to") {
  CHECK(rotation_from_to<double>(Vec3(0, 0, 1), Vec3(0, 0, 1)).isApprox(Mat3::Identity()));

  const Mat3 r = rotation_from_to<double>(Vec3(1, 0, 0), Vec3(0, 1, 0));
  CHECK((r * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-12);
  CHECK((r * Vec3(0, 0, 1) - Vec3(0, 0, 1)).norm() < 1e-12);  // about z
  CHECK(rotation_angle<double>(r) == doctest::Approx(kPi / 2));

  CHECK_THROWS_AS(rotation_from_to<double>(Vec3(0, 0, 1), Vec3(0, 0, -1)), DegenerateInput);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p = oracle::random_rotation(rng).col(0);
    const Vec3 q = oracle::random_rotation(rng).col(1);
    const Mat3 m = rotation_from_to<double>(p, q);
    CHECK((m * p - q).norm() < 1e-9);
    CHECK(is_rotation<double>(m));
    const Vec3 axis = so3_log<double>(m).normalized();
    CHECK(axis.cross(p.cross(q).normalized()).norm() < 1e-9);
  }
}

TEST_CASE("rotation_about_axis") {
  CHECK((rotation_about_axis<double>(Vec3(0, 0, 1), kPi / 2) * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-15);
  CHECK((rotation_about_axis<double>(Vec3(0, 1, 0), kPi) * Vec3(1, 0, 0) - Vec3(-1, 0, 0)).norm() < 1e-15);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(-10.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 axis = oracle::random_rotation(rng).col(2);
    CHECK(rotation_about_axis<double>(axis, 0.0).isApprox(Mat3::Identity()));
    const double theta = angle(rng);
    const Mat3 r = rotation_about_axis<double>(axis, theta);
    CHECK(is_rotation<double>(r));
    CHECK((r * axis - axis).norm() < 1e-9);
    // angle is |theta| folded into [0, pi]
    double folded = std::fmod(std::abs(theta), 2 * kPi);
    if (folded > kPi) folded = 2 * kPi - folded;
    CHECK(rotation_angle<double>(r) == doctest::Approx(folded).epsilon(1e-7));
  }
}

TEST_CASE("so3 exp/log round trip") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const Vec3 w = oracle::uniform_in_cube(rng, 1.5);
    CHECK((so3_log<double>(so3_exp<double>(w)) - w).norm() < 1e-9);
    CHECK((so3_exp<double>(w) - oracle::rotation(w)).norm() < 1e-12);
  }
  const Vec3 tiny(1e-10, -2e-10, 3e-10);
  CHECK((so3_log<double>(so3_exp<double>(tiny)) - tiny).norm() < 1e-18);
}

TEST_CASE("perspective_manifold") {
  std::vector<double> thetas;
  for (int i = -20; i <= 20; ++i) thetas.push_back(i * 0.005);

  SUBCASE("every sample maps p onto q") {
    const FlowSample s{-120.0, 80.0, 3.5, -2.0};
    const Vec3 p = ray_from_offset(s.x, s.y, kCam.f);
    const Vec3 q = ray_from_offset(s.x + s.u, s.y + s.v, kCam.f);
    for (const Vec3& r : perspective_manifold<double>(s, kCam, thetas)) {
      CHECK((so3_exp<double>(r).transpose() * p - q).norm() < 1e-8);
    }
  }
  SUBCASE("zero flow at the principal point is the roll axis") {
    const auto curve = perspective_manifold<double>(FlowSample{0, 0, 0, 0}, kCam, thetas);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      CHECK(curve[i].head<2>().norm() < 1e-12);
      CHECK(std::abs(curve[i].z()) == doctest::Approx(std::abs(thetas[i])));
    }
  }
  SUBCASE("zero flow elsewhere rotates about the pixel ray") {
    const FlowSample s{100.0, -50.0, 0.0, 0.0};
    const Vec3 ray = ray_from_offset(s.x, s.y, kCam.f);
    for (const Vec3& r : perspective_manifold<double>(s, kCam, thetas)) {
      CHECK(r.cross(ray).norm() < 1e-12);
    }
  }
  SUBCASE("pure roll field passes within O(C^2) of (0, 0, C)") {
    const double c = deg_to_rad(0.5);
    const FlowSample s{150.0, 60.0, c * 60.0, -c * 150.0};
    std::vector<double> fine;
    for (int i = -4000; i <= 4000; ++i) fine.push_back(i * 1e-5);
    double best = 1e9;
    for (const Vec3& r : perspective_manifold<double>(s, kCam, fine)) best = std::min(best, (r - Vec3(0, 0, c)).norm());
    CHECK(best < c * c);
  }
  SUBCASE("exact rotation flow: every manifold contains the rotation") {
    std::mt19937_64 rng(5);
    const Vec3 truth = oracle::uniform_in_cube(rng, deg_to_rad(3.0));
    for (int i = 0; i < 30; ++i) {
      const Vec3 pos = oracle::uniform_in_cube(rng, 130.0);
      const Vec2 flow = oracle::perspective_flow(pos.x(), pos.y(), kCam.f, truth);
      const FlowSample s{pos.x(), pos.y(), flow.x(), flow.y()};
      // theta of the true rotation: solve on a fine sweep
      std::vector<double> sweep;
      for (int k = -3000; k <= 3000; ++k) sweep.push_back(k * 2e-5);
      double best = 1e9;
      for (const Vec3& r : perspective_manifold<double>(s, kCam, sweep)) best = std::min(best, (r - truth).norm());
      CHECK(best < 2e-5);
    }
  }
}

TEST_CASE("lh_plane_normals") {
  const double f = 300.0;
  auto [nu, nv] = lh_plane_normals(0.0, 0.0, f);
  CHECK((nu - Vec3(0, -f, 0)).norm() == 0.0);
  CHECK((nv - Vec3(f, 0, 0)).norm() == 0.0);
  std::tie(nu, nv) = lh_plane_normals(f, f, f);
  CHECK((nu - Vec3(f, -2 * f, f)).norm() < 1e-12);
  CHECK((nv - Vec3(2 * f, -f, -f)).norm() < 1e-12);

  SUBCASE("normals reproduce the differential flow of the projection") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
      const Vec3 pos = oracle::uniform_in_cube(rng, 250.0);
      const Vec3 rot = oracle::uniform_in_cube(rng, 1.0);
      const auto [a, b] = lh_plane_normals(pos.x(), pos.y(), f);
      const Vec2 ref = oracle::differential_flow(pos.x(), pos.y(), f, rot);
      CHECK(a.dot(rot) == doctest::Approx(ref.x()).epsilon(1e-6).scale(1.0));
      CHECK(b.dot(rot) == doctest::Approx(ref.y()).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("lh_line") {
  const double f = 400.0;
  SUBCASE("center pixel") {
    const CompatLine l = lh_line(FlowSample{0, 0, 2.0, -3.0}, f);
    CHECK(l.dir.head<2>().norm() == 0.0);
    CHECK(l.dir.z() > 0.0);
    CHECK((l.p0 - Vec3(-3.0 / f, -2.0 / f, 0)).norm() < 1e-15);
  }
  SUBCASE("(f, f) direction") {
    const CompatLine l = lh_line(FlowSample{f, f, 1.0, 1.0}, f);
    CHECK((l.dir - Vec3(3 * f * f, 3 * f * f, 3 * f * f)).norm() < 1e-9);
  }
  SUBCASE("zero flow passes through the identity") {
    CHECK(lh_line(FlowSample{123.0, -45.0, 0.0, 0.0}, f).p0.norm() == 0.0);
  }
  SUBCASE("every point of the line reproduces the flow") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 1000; ++i) {
      const Vec3 pos = oracle::uniform_in_cube(rng, 300.0);
      const Vec3 flow = oracle::uniform_in_cube(rng, 20.0);
      const FlowSample s{pos.x(), pos.y(), flow.x(), flow.y()};
      const CompatLine l = lh_line(s, f);
      CHECK(l.p0.z() == 0.0);
      for (const double t : {-1e-5, 0.0, 3e-6, 2e-5}) {
        const Vec2 uv = rotational_flow(s.x, s.y, f, l.at(t));
        CHECK(std::abs(uv.x() - s.u) <= 1e-9 * std::max(1.0, std::abs(s.u)) * 10);
        CHECK(std::abs(uv.y() - s.v) <= 1e-9 * std::max(1.0, std::abs(s.v)) * 10);
      }
    }
  }
}

TEST_CASE("precompute_directions") {
  const double f = 400.0;
  std::vector<Vec2> one{Vec2(0, 0)};
  const auto t1 = precompute_directions<double>(one, f);
  CHECK(t1.size() == 1);
  CHECK((t1[0] - Vec3(0, 0, f * f)).norm() == 0.0);

  // stride-15 grid of a 480x270 frame: 32 x 18
  std::vector<Vec2> grid;
  for (const auto& px : regular_grid(480, 270, 15)) grid.emplace_back(px.x() - 240.0, px.y() - 135.0);
  CHECK(grid.size() == 32 * 18);
  const auto table = precompute_directions<double>(grid, f);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const FlowSample a{grid[i].x(), grid[i].y(), 1.0, 2.0};
    const FlowSample b{grid[i].x(), grid[i].y(), -7.0, 0.5};
    const CompatLine la = lh_line(a, f);
    const CompatLine lb = lh_line(b, f);
    CHECK((table[i].array() == la.dir.array()).all());
    CHECK((la.dir.array() == lb.dir.array()).all());
  }
}
