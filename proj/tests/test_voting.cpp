#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rotvote/synthetic.hpp"
#include "rotvote/voting.hpp"

using namespace rotvote;
using Vec3 = Vector3<double>;

namespace {

std::set<std::array<int, 3>> as_triples(const std::vector<BinKey>& keys) {
  std::set<std::array<int, 3>> out;
  for (const auto k : keys) out.insert(BinGrid::unpack(k));
  return out;
}

SceneSpec rotation_scene(const Vec3& rotation, int stride = 15) {
  SceneSpec spec;
  spec.stride = stride;
  spec.rotation = rotation;
  return spec;
}

}  // namespace

TEST_CASE("BinGrid") {
  const BinGrid grid = BinGrid::from_degrees();
  CHECK(grid.n_per_axis() == 141);
  CHECK(grid.range() == doctest::Approx(deg_to_rad(4.0)));

  SUBCASE("origin falls in the central bin") {
    const auto key = grid.bin_of(Vec3::Zero());
    REQUIRE(key);
    CHECK(BinGrid::unpack(*key) == std::array<int, 3>{70, 70, 70});
    const Vec3 c = grid.bin_center(*key);
    CHECK(c.cwiseAbs().maxCoeff() <= grid.bin_size() / 2);
  }
  SUBCASE("half-open cube") {
    const double r = grid.range();
    CHECK_FALSE(grid.bin_of(Vec3(r, 0, 0)));
    CHECK_FALSE(grid.bin_of(Vec3(0, 0, r)));
    CHECK(grid.bin_of(Vec3(-r, -r, -r)));
    CHECK_FALSE(grid.bin_of(Vec3(std::nan(""), 0, 0)));
  }
  SUBCASE("bin_of(bin_center(k)) == k") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> idx(0, grid.n_per_axis() - 1);
    for (int i = 0; i < 1000; ++i) {
      const int a = idx(rng);
      const int b = idx(rng);
      const int c = idx(rng);
      const BinKey key = BinGrid::pack(a, b, c);
      const Vec3 center = grid.bin_center(key);
      CHECK(grid.contains(center));
      CHECK(grid.bin_of(center) == key);
    }
    // the clipped last bin too
    const int last = grid.n_per_axis() - 1;
    CHECK(grid.bin_of(grid.bin_center(BinGrid::pack(last, last, last))) == BinGrid::pack(last, last, last));
  }
  SUBCASE("key order is lexicographic in the index triple") {
    CHECK(BinGrid::pack(1, 0, 0) > BinGrid::pack(0, 140, 140));
    CHECK(BinGrid::pack(0, 1, 0) > BinGrid::pack(0, 0, 140));
  }
  SUBCASE("invalid grids") {
    CHECK_THROWS_AS(BinGrid(0.0, 0.01), ConfigError);
    CHECK_THROWS_AS(BinGrid(1.0, -0.01), ConfigError);
    CHECK_THROWS_AS(BinGrid(1.0, 1e-7), ConfigError);  // > 2^21 bins per axis
  }
}

TEST_CASE("cast_votes: exact traversal matches brute force") {
  const BinGrid grid(1.0, 0.23);  // 9 bins per axis, last bin clipped
  const int n = grid.n_per_axis();
  REQUIRE(n == 9);
  std::mt19937_64 rng(31);
  int nonempty = 0;
  for (int i = 0; i < 400; ++i) {
    const Vec3 p0 = oracle::uniform_in_cube(rng, 1.3);
    Vec3 d = oracle::uniform_in_cube(rng, 1.0);
    if (i % 4 == 0) d.z() = 1.0;  // LH-like, steep in C
    const CompatLine line{d, p0};
    const auto keys = cast_votes(line, grid, Rasterizer::exact);
    const auto expected = oracle::bins_hit(p0, d, grid.range(), grid.bin_size(), n);
    CHECK(as_triples(keys) == expected);
    CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
    nonempty += !keys.empty();
  }
  CHECK(nonempty > 100);
}

TEST_CASE("cast_votes: examples") {
  const BinGrid grid = BinGrid::from_degrees();
  const int n = grid.n_per_axis();
  for (const Rasterizer raster : {Rasterizer::exact, Rasterizer::fixed_step}) {
    CAPTURE(static_cast<int>(raster));
    SUBCASE("zero flow at the center pixel votes for the central column") {
      const auto keys = cast_votes(lh_line(FlowSample{0, 0, 0, 0}, 400.0), grid, raster);
      CHECK(keys.size() == static_cast<std::size_t>(n));
      for (const auto k : keys) {
        const auto idx = BinGrid::unpack(k);
        CHECK(idx[0] == 70);
        CHECK(idx[1] == 70);
      }
    }
    SUBCASE("line outside the cube") {
      const CompatLine line{Vec3(0, 0, 1), Vec3(1.0, 0.0, 0.0)};
      CHECK(cast_votes(line, grid, raster).empty());
      const CompatLine along_a{Vec3(1, 0, 0), Vec3(0.0, 0.5, 0.0)};
      CHECK(cast_votes(along_a, grid, raster).empty());
    }
  }
}

TEST_CASE("cast_votes: list length bounds") {
  const BinGrid grid = BinGrid::from_degrees();
  const auto n = static_cast<double>(grid.n_per_axis());
  std::mt19937_64 rng(41);
  for (int i = 0; i < 500; ++i) {
    // lines through the inner cube with an arbitrary direction
    const Vec3 p0 = oracle::uniform_in_cube(rng, 0.5 * grid.range());
    const Vec3 d = oracle::uniform_in_cube(rng, 1.0);
    const CompatLine line{d, p0};
    const auto sampled = cast_votes(line, grid, Rasterizer::fixed_step);
    CHECK(static_cast<double>(sampled.size()) <= std::sqrt(3.0) * n + 2);
    const auto exact = cast_votes(line, grid, Rasterizer::exact);
    CHECK(exact.size() <= 3 * grid.n_per_axis() - 2);
    CHECK(exact.size() >= sampled.size());
    // every sampled bin is a bin the line really crosses
    CHECK(std::includes(exact.begin(), exact.end(), sampled.begin(), sampled.end()));
  }
  // lines that span every C slab visit at least n bins
  for (int i = 0; i < 200; ++i) {
    const Vec3 p0 = oracle::uniform_in_cube(rng, 0.05 * grid.range());
    const Vec3 d(0.1 * std::uniform_real_distribution<double>(-1, 1)(rng), 0.1, 1.0);
    const CompatLine line{d, Vec3(p0.x(), p0.y(), 0.0)};
    const auto keys = cast_votes(line, grid, Rasterizer::exact);
    CHECK(static_cast<double>(keys.size()) >= n);
    CHECK(static_cast<double>(keys.size()) <= std::sqrt(3.0) * n + 2);
    // one sample per bin width can step over the clipped last slab
    const auto sampled = cast_votes(line, grid, Rasterizer::fixed_step);
    CHECK(static_cast<double>(sampled.size()) >= n - 1);
  }
}

TEST_CASE("cast_votes_curve") {
  const BinGrid grid = BinGrid::from_degrees();
  std::vector<Vec3> same_bin{Vec3(1e-4, 1e-4, 1e-4), Vec3(2e-4, 1e-4, 1e-4), Vec3(1e-4, 3e-4, 2e-4)};
  CHECK(cast_votes_curve(same_bin, grid).size() == 1);
  CHECK(cast_votes_curve(std::vector<Vec3>{}, grid).empty());
  std::vector<Vec3> outside{Vec3(1, 1, 1)};
  CHECK(cast_votes_curve(outside, grid).empty());

  SUBCASE("curve and line votes share the true bin on a rotation-only field") {
    std::mt19937_64 rng(43);
    const Vec3 truth = oracle::uniform_in_cube(rng, deg_to_rad(0.4));
    const auto key = grid.bin_of(truth);
    REQUIRE(key);
    const auto field = generate_field(rotation_scene(truth, 40), 0).field;
    int both = 0;
    for (const auto& s : field.samples) {
      const auto line = cast_votes(lh_line(s, field.intrinsics.f), grid);
      CHECK(std::binary_search(line.begin(), line.end(), *key));
      const auto curve = perspective_manifold<double>(s, field.intrinsics,
                                                      perspective_thetas(s, field.intrinsics, grid));
      const auto votes = cast_votes_curve(curve, grid);
      both += std::binary_search(votes.begin(), votes.end(), *key);
    }
    CHECK(both >= static_cast<int>(field.size()) * 9 / 10);
  }
}

TEST_CASE("find_mode") {
  const BinGrid grid = BinGrid::from_degrees();
  const BinKey k1 = BinGrid::pack(10, 20, 30);
  const BinKey k2 = BinGrid::pack(11, 20, 30);
  const BinKey k3 = BinGrid::pack(12, 20, 30);
  std::vector<std::vector<BinKey>> lists{{k1, k2}, {k1}, {k3}};
  const Mode m = find_mode(lists, grid);
  CHECK(m.winner == k1);
  CHECK(m.count == 2);

  SUBCASE("ties go to the smaller rotation") {
    const BinKey central = *grid.bin_of(Vec3::Zero());
    const BinKey off = BinGrid::pack(3, 3, 3);
    CHECK(off < central);
    std::vector<std::vector<BinKey>> tie{{off}, {central}, {off, central}};
    CHECK(find_mode(tie, grid).winner == central);
  }
  SUBCASE("equal magnitude: smaller key") {
    const BinKey lo = BinGrid::pack(70, 69, 70);
    const BinKey hi = BinGrid::pack(70, 70, 69);
    CHECK(grid.bin_center(lo).squaredNorm() == grid.bin_center(hi).squaredNorm());
    std::vector<std::vector<BinKey>> tie{{hi}, {lo}};
    CHECK(find_mode(tie, grid).winner == std::min(lo, hi));
  }
  SUBCASE("no votes") {
    std::vector<std::vector<BinKey>> none{{}, {}};
    CHECK_THROWS_AS(find_mode(none, grid), NoVotes);
  }
  SUBCASE("1000 lines through one bin plus noise lines") {
    std::mt19937_64 rng(47);
    const Vec3 target = oracle::uniform_in_cube(rng, 0.8 * grid.range());
    const BinKey want = *grid.bin_of(target);
    std::vector<std::vector<BinKey>> votes;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 d = oracle::uniform_in_cube(rng, 1.0);
      votes.push_back(cast_votes(CompatLine{d, target}, grid, Rasterizer::exact));
      votes.push_back(cast_votes(CompatLine{oracle::uniform_in_cube(rng, 1.0),
                                            oracle::uniform_in_cube(rng, grid.range())},
                                 grid, Rasterizer::exact));
    }
    const Mode mode = find_mode(votes, grid);
    CHECK(mode.winner == want);
    CHECK(mode.count >= 1000);
  }
}

TEST_CASE("estimate_rotation") {
  const BinGrid grid = BinGrid::from_degrees();
  const double bound = std::sqrt(3.0) / 2.0 * grid.bin_size();

  SUBCASE("pure rotation: quantization bound") {
    const Vec3 truth = Vec3(0.5, -0.3, 0.2) * deg_to_rad(1.0);
    const auto frame = generate_field(rotation_scene(truth), 0);
    const auto result = estimate_rotation(frame.field, grid);
    CHECK((so3_log<double>(so3_exp<double>(result.rotation).transpose() * so3_exp<double>(truth))).norm() <= bound);
    CHECK(result.winner == *grid.bin_of(truth));
  }
  SUBCASE("pure rotation: exact traversal is complete") {
    std::mt19937_64 rng(51);
    EstimatorOptions opt;
    opt.raster = Rasterizer::exact;
    for (int i = 0; i < 20; ++i) {
      const Vec3 truth = oracle::uniform_in_cube(rng, 0.95 * grid.range());
      const auto frame = generate_field(rotation_scene(truth), 0);
      const auto tally = tally_votes(frame.field, grid, opt);
      const BinKey key = *grid.bin_of(truth);
      for (std::size_t j = 0; j < frame.field.size(); ++j) CHECK(tally.voted_for(j, key));
      CHECK(tally.winner_count == frame.field.size());
    }
  }
  SUBCASE("zero field") {
    const auto frame = generate_field(rotation_scene(Vec3::Zero()), 0);
    const auto result = estimate_rotation(frame.field, grid);
    CHECK(result.winner == *grid.bin_of(Vec3::Zero()));
    CHECK(result.inlier_fraction == 1.0);
  }
  SUBCASE("30% rotation-consistent flows") {
    std::mt19937_64 rng(53);
    const Vec3 truth = oracle::uniform_in_cube(rng, deg_to_rad(2.0));
    SceneSpec spec = rotation_scene(truth);
    const auto n = spec.positions().size();
    DepthGrid depth;
    std::bernoulli_distribution far(0.3);
    std::uniform_real_distribution<double> near(1.0, 4.0);
    std::vector<std::uint8_t> clean(n);
    for (std::size_t i = 0; i < n; ++i) {
      clean[i] = far(rng);
      depth.z.push_back(clean[i] ? 1e9 : near(rng));
    }
    spec.depth = depth;
    spec.translation = Vec3(0.03, -0.02, 0.05);
    const auto frame = generate_field(spec, 1);
    const auto result = estimate_rotation(frame.field, grid);
    const auto got = BinGrid::unpack(result.winner);
    const auto want = BinGrid::unpack(*grid.bin_of(truth));
    for (int a = 0; a < 3; ++a) CHECK(std::abs(got[a] - want[a]) <= 2);
    const double clean_fraction =
        static_cast<double>(std::count(clean.begin(), clean.end(), 1)) / static_cast<double>(n);
    CHECK(result.inlier_fraction == doctest::Approx(clean_fraction).epsilon(0.15));
  }
  SUBCASE("every manifold misses the cube") {
    FlowField field{{400.0, 240.0, 135.0, 480, 270}, {{0, 0, 400.0, 0}, {10, 10, 400.0, 0.0}}};
    CHECK_THROWS_AS(estimate_rotation(field, grid), NoVotes);
  }
  SUBCASE("empty field") {
    FlowField field{{400.0, 240.0, 135.0, 480, 270}, {}};
    CHECK_THROWS_AS(estimate_rotation(field, grid), DataError);
  }
  SUBCASE("non-finite samples are skipped") {
    auto frame = generate_field(rotation_scene(Vec3(0.01, 0.0, 0.0)), 0);
    frame.field.samples[3].u = std::nan("");
    EstimatorOptions opt;
    opt.raster = Rasterizer::exact;
    const auto result = estimate_rotation(frame.field, grid, opt);
    CHECK(result.inlier_mask[3] == 0);
    CHECK(result.voting_flows == frame.field.size() - 1);
    CHECK(result.inlier_fraction == 1.0);
  }
  SUBCASE("vote count bound") {
    std::mt19937_64 rng(59);
    for (int i = 0; i < 5; ++i) {
      const auto frame = generate_field(rotation_scene(oracle::uniform_in_cube(rng, deg_to_rad(3.0))), 0);
      const auto result = estimate_rotation(frame.field, grid);
      CHECK(static_cast<double>(result.vote_count) <=
            (std::sqrt(3.0) * grid.n_per_axis() + 2) * static_cast<double>(frame.field.size()));
    }
  }
}

TEST_CASE("estimate_rotation: permutation and thread invariance") {
  const BinGrid grid = BinGrid::from_degrees();
  std::mt19937_64 rng(61);
  SceneSpec spec = rotation_scene(oracle::uniform_in_cube(rng, deg_to_rad(2.0)));
  spec.noise_sigma = 0.5;
  spec.translation = Vec3(0.01, 0.0, 0.02);
  spec.depth = PlanarRampDepth{5.0, 0.01, 0.02};
  spec.movers.push_back({30, 30, 200, 150, Vector2<double>(4.0, -1.0)});
  const auto frame = generate_field(spec, 9);
  const auto base = estimate_rotation(frame.field, grid);

  for (const unsigned threads : {2u, 3u, 8u}) {
    EstimatorOptions opt;
    opt.threads = threads;
    const auto r = estimate_rotation(frame.field, grid, opt);
    CHECK(r.winner == base.winner);
    CHECK(r.winner_count == base.winner_count);
    CHECK(r.inlier_mask == base.inlier_mask);
    CHECK(r.vote_count == base.vote_count);
  }

  std::vector<std::size_t> order(frame.field.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  FlowField shuffled{frame.field.intrinsics, {}};
  for (const auto i : order) shuffled.samples.push_back(frame.field.samples[i]);
  const auto r = estimate_rotation(shuffled, grid);
  CHECK(r.winner == base.winner);
  CHECK(r.winner_count == base.winner_count);
  for (std::size_t j = 0; j < order.size(); ++j) CHECK(r.inlier_mask[j] == base.inlier_mask[order[j]]);
}

TEST_CASE("estimate_rotation: perspective model") {
  const BinGrid grid = BinGrid::from_degrees();
  const Vec3 truth = Vec3(0.2, -0.1, 0.15) * deg_to_rad(1.0);
  // exact perspective flow of the rotation
  SceneSpec spec = rotation_scene(Vec3::Zero(), 30);
  auto frame = generate_field(spec, 0);
  for (auto& s : frame.field.samples) {
    const auto uv = oracle::perspective_flow(s.x, s.y, frame.field.intrinsics.f, truth);
    s.u = uv.x();
    s.v = uv.y();
  }
  EstimatorOptions opt;
  opt.model = MotionModel::perspective;
  const auto result = estimate_rotation(frame.field, grid, opt);
  CHECK(result.winner == *grid.bin_of(truth));
  CHECK(result.inlier_fraction > 0.9);
}
