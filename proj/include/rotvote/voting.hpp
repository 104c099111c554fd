#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rotvote/flow_field.hpp"
#include "rotvote/geometry.hpp"

namespace rotvote {

/// Packed (A, B, C) bin index triple, 21 bits per axis, A in the high bits.
/// Ordering of keys is lexicographic in (A, B, C) index.
struct BinKey {
  std::uint64_t value = 0;

  friend auto operator<=>(const BinKey&, const BinKey&) = default;
};

/// Discretization of the rotation cube [-range, range)^3 into cubic bins.
/// Bin i on an axis covers [-range + i * bin_size, -range + (i + 1) * bin_size);
/// the last bin is clipped at +range.
class BinGrid {
 public:
  static constexpr int kMaxPerAxis = (1 << 21) - 1;

  /// `range` and `bin_size` in radians.
  BinGrid(double range, double bin_size);

  static BinGrid from_degrees(double range_deg = 4.0, double bin_deg = 0.057);

  double range() const { return range_; }
  double bin_size() const { return bin_size_; }
  int n_per_axis() const { return n_; }

  bool contains(const Vector3<double>& r) const;

  std::optional<BinKey> bin_of(const Vector3<double>& r) const;

  /// Center of the in-cube part of the bin, so bin_of(bin_center(k)) == k.
  Vector3<double> bin_center(BinKey key) const;

  static BinKey pack(int a, int b, int c) {
    return {(static_cast<std::uint64_t>(a) << 42) | (static_cast<std::uint64_t>(b) << 21) |
            static_cast<std::uint64_t>(c)};
  }
  static std::array<int, 3> unpack(BinKey key) {
    constexpr std::uint64_t mask = (1u << 21) - 1;
    return {static_cast<int>(key.value >> 42), static_cast<int>((key.value >> 21) & mask),
            static_cast<int>(key.value & mask)};
  }

  /// Bin index along one axis; caller guarantees the value is in range.
  int axis_index(double component) const;

  /// Center of the in-cube part of slab `index` along any axis.
  double slab_center(int index) const;

 private:
  double range_;
  double bin_size_;
  int n_;
};

/// How a compatible line is turned into bins.
enum class Rasterizer {
  exact,       ///< every bin the line passes through (3D DDA traversal)
  fixed_step,  ///< samples spaced one bin size apart along the line
};

enum class MotionModel { longuet_higgins, perspective };

/// Bins of `line` inside the cube, sorted and duplicate-free. fixed_step
/// samples at p0 + k * bin_size * dir / |dir|, k integer.
std::vector<BinKey> cast_votes(const CompatLine& line, const BinGrid& grid,
                               Rasterizer raster = Rasterizer::fixed_step);

/// Bins of a densely sampled curve, sorted and duplicate-free. exact takes the
/// bin of every in-cube sample; fixed_step resamples the polyline at one bin
/// size of arc length from its first crossing of the C = 0 plane, matching
/// cast_votes on lh_line (whose p0 has C = 0).
std::vector<BinKey> cast_votes_curve(std::span<const Vector3<double>> samples, const BinGrid& grid,
                                     Rasterizer raster = Rasterizer::fixed_step);

/// Rotation angles for sampling the perspective manifold of `s` so that
/// consecutive samples move at most a quarter bin and the whole cube is covered.
std::vector<double> perspective_thetas(const FlowSample& s, const CameraIntrinsics& k,
                                       const BinGrid& grid);

struct Mode {
  BinKey winner;
  std::size_t count = 0;
};

/// Most frequent key over all lists. Ties go to the bin whose center has the
/// smaller magnitude, then to the smaller key. Throws NoVotes if all lists are
/// empty.
Mode find_mode(std::span<const std::vector<BinKey>> tallies, const BinGrid& grid);

/// Every vote of a frame, flat. Flow i voted for keys[offsets[i], offsets[i+1]),
/// sorted and unique.
struct VoteTally {
  std::vector<BinKey> keys;
  std::vector<std::size_t> offsets;
  BinKey winner;
  std::size_t winner_count = 0;

  std::size_t flow_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const BinKey> votes_of(std::size_t flow) const {
    return {keys.data() + offsets[flow], offsets[flow + 1] - offsets[flow]};
  }
  std::size_t voting_flows() const;
  bool voted_for(std::size_t flow, BinKey key) const;
};

struct EstimatorOptions {
  MotionModel model = MotionModel::longuet_higgins;
  Rasterizer raster = Rasterizer::fixed_step;
  /// Worker threads; 0 uses the hardware concurrency. The result does not
  /// depend on this value.
  unsigned threads = 1;
};

/// Casts all votes for `field` and finds the winner. Non-finite samples get
/// an empty vote list. Throws NoVotes when nothing lands in the cube.
VoteTally tally_votes(const FlowField& field, const BinGrid& grid, const EstimatorOptions& options = {});

struct EstimateResult {
  RotationVec<double> rotation;  ///< center of the winning bin
  BinKey winner;
  std::size_t winner_count = 0;
  std::vector<std::uint8_t> inlier_mask;  ///< per sample: voted for the winner
  double inlier_fraction = 0.0;           ///< winner_count / voting flows
  std::size_t vote_count = 0;
  std::size_t voting_flows = 0;
  std::chrono::duration<double> elapsed{0.0};
};

EstimateResult estimate_rotation(const FlowField& field, const BinGrid& grid,
                                 const EstimatorOptions& options = {});

}  // namespace rotvote
