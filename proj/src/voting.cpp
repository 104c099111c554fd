#include "rotvote/voting.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

namespace rotvote {

// ---------------------------------------------------------------- BinGrid

BinGrid::BinGrid(double range, double bin_size) : range_(range), bin_size_(bin_size), n_(0) {
  if (!(std::isfinite(range) && range > 0.0)) throw ConfigError("bin grid range must be > 0");
  if (!(std::isfinite(bin_size) && bin_size > 0.0)) throw ConfigError("bin size must be > 0");
  const double n = std::ceil(2.0 * range / bin_size - 1e-9);
  if (n > kMaxPerAxis) {
    throw ConfigError("bin grid too fine: " + std::to_string(n) + " bins per axis (max " +
                      std::to_string(kMaxPerAxis) + ")");
  }
  n_ = std::max(1, static_cast<int>(n));
}

BinGrid BinGrid::from_degrees(double range_deg, double bin_deg) {
  return {deg_to_rad(range_deg), deg_to_rad(bin_deg)};
}

bool BinGrid::contains(const Vector3<double>& r) const {
  for (int a = 0; a < 3; ++a) {
    if (!(r[a] >= -range_ && r[a] < range_)) return false;
  }
  return true;
}

int BinGrid::axis_index(double component) const {
  const int i = static_cast<int>(std::floor((component + range_) / bin_size_));
  return std::clamp(i, 0, n_ - 1);
}

std::optional<BinKey> BinGrid::bin_of(const Vector3<double>& r) const {
  if (!contains(r)) return std::nullopt;
  return pack(axis_index(r.x()), axis_index(r.y()), axis_index(r.z()));
}

double BinGrid::slab_center(int index) const {
  const double lo = -range_ + index * bin_size_;
  const double hi = std::min(range_, lo + bin_size_);
  return 0.5 * (lo + hi);
}

Vector3<double> BinGrid::bin_center(BinKey key) const {
  const auto idx = unpack(key);
  return {slab_center(idx[0]), slab_center(idx[1]), slab_center(idx[2])};
}

// ---------------------------------------------------------------- casting

namespace {

struct Span1d {
  double t_in;
  double t_out;
};

/// Parameter interval of the line inside [-range, range]^3.
std::optional<Span1d> clip_to_cube(const CompatLine& line, double range) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double d = line.dir[a];
    const double p = line.p0[a];
    if (d == 0.0) {
      if (p < -range || p >= range) return std::nullopt;
      continue;
    }
    double ta = (-range - p) / d;
    double tb = (range - p) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (!(t0 < t1)) return std::nullopt;
  return Span1d{t0, t1};
}

void traverse_exact(const CompatLine& line, const BinGrid& grid, const Span1d& span,
                    std::vector<BinKey>& out) {
  const double r = grid.range();
  const double s = grid.bin_size();
  const int n = grid.n_per_axis();

  const Vector3<double> start = line.at(span.t_in);
  std::array<int, 3> idx{grid.axis_index(start.x()), grid.axis_index(start.y()),
                         grid.axis_index(start.z())};
  std::array<int, 3> step{};
  for (int a = 0; a < 3; ++a) step[a] = line.dir[a] > 0.0 ? 1 : (line.dir[a] < 0.0 ? -1 : 0);

  // At most one crossing per bin boundary on each axis.
  for (int guard = 0; guard <= 3 * n; ++guard) {
    out.push_back(BinGrid::pack(idx[0], idx[1], idx[2]));
    int axis = -1;
    double t_next = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      if (step[a] == 0) continue;
      const double boundary = -r + (step[a] > 0 ? idx[a] + 1 : idx[a]) * s;
      const double t = (boundary - line.p0[a]) / line.dir[a];
      if (t < t_next) {
        t_next = t;
        axis = a;
      }
    }
    if (axis < 0 || t_next >= span.t_out) break;
    idx[axis] += step[axis];
    if (idx[axis] < 0 || idx[axis] >= n) break;
  }
}

/// Samples at p0 + k * bin_size * dir / |dir| for every integer k inside the
/// clipped segment. The phase is tied to p0 rather than to the cube entry, so
/// a line through the origin is sampled at the origin.
void sample_fixed_step(const CompatLine& line, const BinGrid& grid, const Span1d& span,
                       std::vector<BinKey>& out) {
  const double dt = grid.bin_size() / line.dir.norm();
  std::optional<BinKey> last;
  for (auto k = static_cast<long>(std::ceil(span.t_in / dt));; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t >= span.t_out) break;
    if (t < span.t_in) continue;
    const auto key = grid.bin_of(line.at(t));
    if (key && key != last) {
      out.push_back(*key);
      last = key;
    }
  }
}

void sort_unique(std::vector<BinKey>& keys) {
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
}

}  // namespace

std::vector<BinKey> cast_votes(const CompatLine& line, const BinGrid& grid, Rasterizer raster) {
  std::vector<BinKey> out;
  const auto span = clip_to_cube(line, grid.range());
  if (!span) return out;
  switch (raster) {
    case Rasterizer::exact:
      traverse_exact(line, grid, *span, out);
      break;
    case Rasterizer::fixed_step:
      sample_fixed_step(line, grid, *span, out);
      break;
  }
  sort_unique(out);
  return out;
}

std::vector<BinKey> cast_votes_curve(std::span<const Vector3<double>> samples, const BinGrid& grid,
                                     Rasterizer raster) {
  std::vector<BinKey> out;
  if (raster == Rasterizer::exact) {
    std::optional<BinKey> last;
    for (const auto& r : samples) {
      const auto key = grid.bin_of(r);
      if (key && key != last) {
        out.push_back(*key);
        last = key;
      }
    }
    sort_unique(out);
    return out;
  }

  // Arc-length resampling of the polyline, phase-locked to its first crossing
  // of the C = 0 plane (where lh_line puts p0), else to its first sample.
  const double s = grid.bin_size();
  std::vector<double> arc(samples.size(), 0.0);
  for (std::size_t i = 1; i < samples.size(); ++i) arc[i] = arc[i - 1] + (samples[i] - samples[i - 1]).norm();
  double anchor = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double za = samples[i - 1].z();
    const double zb = samples[i].z();
    if (za == 0.0 || (za < 0.0) != (zb < 0.0)) {
      anchor = za == 0.0 ? arc[i - 1] : arc[i - 1] + za / (za - zb) * (arc[i] - arc[i - 1]);
      break;
    }
  }
  std::size_t seg = 1;
  for (auto k = static_cast<long>(std::ceil(-anchor / s)); seg < samples.size(); ++k) {
    const double pos = anchor + static_cast<double>(k) * s;
    if (pos < 0.0) continue;
    while (seg < samples.size() && arc[seg] < pos) ++seg;
    if (seg >= samples.size()) break;
    const double len = arc[seg] - arc[seg - 1];
    const double t = len > 0.0 ? (pos - arc[seg - 1]) / len : 0.0;
    const Vector3<double> r = samples[seg - 1] + t * (samples[seg] - samples[seg - 1]);
    if (const auto key = grid.bin_of(r)) out.push_back(*key);
  }
  sort_unique(out);
  return out;
}

std::vector<double> perspective_thetas(const FlowSample& s, const CameraIntrinsics& k,
                                       const BinGrid& grid) {
  const Vector3<double> p = ray_from_offset(s.x, s.y, k.f);
  const Vector3<double> q = ray_from_offset(s.x + s.u, s.y + s.v, k.f);
  const double base_angle = std::atan2(p.cross(q).norm(), p.dot(q));
  // The manifold leaves the cube once |theta| exceeds the cube half-diagonal
  // plus the p -> q angle; 5% slack covers the curvature of the log map.
  const double limit = 1.05 * (std::sqrt(3.0) * grid.range() + base_angle) + grid.bin_size();
  const double step = 0.25 * grid.bin_size();
  const auto count = static_cast<long>(std::ceil(limit / step));
  std::vector<double> thetas;
  thetas.reserve(static_cast<std::size_t>(2 * count + 1));
  for (long i = -count; i <= count; ++i) thetas.push_back(static_cast<double>(i) * step);
  return thetas;
}

// ---------------------------------------------------------------- mode

namespace {

unsigned resolve_threads(unsigned requested) {
  if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
  return requested;
}

/// Runs fn(chunk_index, begin, end) over `count` items in `chunks` contiguous
/// pieces, one thread per piece, rethrowing the first failure.
template <typename Fn>
void for_chunks(std::size_t count, unsigned chunks, Fn&& fn) {
  if (chunks <= 1 || count < 2) {
    fn(0u, std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(chunks);
  const std::size_t per = (count + chunks - 1) / chunks;
  for (unsigned c = 0; c < chunks; ++c) {
    const std::size_t begin = std::min(count, c * per);
    const std::size_t end = std::min(count, begin + per);
    workers.emplace_back([&, c, begin, end] {
      try {
        fn(c, begin, end);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void parallel_sort(std::vector<BinKey>& keys, unsigned threads) {
  if (threads <= 1 || keys.size() < (1u << 16)) {
    std::sort(keys.begin(), keys.end());
    return;
  }
  const std::size_t per = (keys.size() + threads - 1) / threads;
  std::vector<std::size_t> bounds;
  for (std::size_t b = 0; b < keys.size(); b += per) bounds.push_back(b);
  bounds.push_back(keys.size());
  const std::size_t pieces = bounds.size() - 1;
  for_chunks(pieces, static_cast<unsigned>(pieces), [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      std::sort(keys.begin() + static_cast<long>(bounds[p]), keys.begin() + static_cast<long>(bounds[p + 1]));
    }
  });
  for (std::size_t width = 1; width < pieces; width *= 2) {
    for (std::size_t p = 0; p + width < pieces; p += 2 * width) {
      const auto first = keys.begin() + static_cast<long>(bounds[p]);
      const auto middle = keys.begin() + static_cast<long>(bounds[p + width]);
      const auto last = keys.begin() + static_cast<long>(bounds[std::min(pieces, p + 2 * width)]);
      std::inplace_merge(first, middle, last);
    }
  }
}

Mode mode_of_sorted(std::span<const BinKey> sorted, const BinGrid& grid) {
  if (sorted.empty()) throw NoVotes("no votes landed inside the rotation search cube");
  Mode best{sorted.front(), 0};
  double best_mag = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const std::size_t count = j - i;
    if (count >= best.count) {
      const double mag = grid.bin_center(sorted[i]).squaredNorm();
      // Keys arrive in ascending order, so an equal (count, magnitude) keeps
      // the smaller key.
      if (count > best.count || mag < best_mag) {
        best = {sorted[i], count};
        best_mag = mag;
      }
    }
    i = j;
  }
  return best;
}

}  // namespace

Mode find_mode(std::span<const std::vector<BinKey>> tallies, const BinGrid& grid) {
  std::vector<BinKey> all;
  for (const auto& list : tallies) all.insert(all.end(), list.begin(), list.end());
  std::sort(all.begin(), all.end());
  return mode_of_sorted(all, grid);
}

std::size_t VoteTally::voting_flows() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) n += offsets[i + 1] > offsets[i];
  return n;
}

bool VoteTally::voted_for(std::size_t flow, BinKey key) const {
  const auto votes = votes_of(flow);
  return std::binary_search(votes.begin(), votes.end(), key);
}

// ---------------------------------------------------------------- estimator

VoteTally tally_votes(const FlowField& field, const BinGrid& grid, const EstimatorOptions& options) {
  const CameraIntrinsics& k = field.intrinsics;
  if (!(std::isfinite(k.f) && k.f > 0.0)) throw ConfigError("focal length must be > 0");
  const std::size_t n = field.size();
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(options.threads), std::max<std::size_t>(1, n)));

  std::vector<Vector3<double>> directions;
  if (options.model == MotionModel::longuet_higgins) {
    std::vector<Vector2<double>> positions;
    positions.reserve(n);
    for (const auto& s : field.samples) positions.emplace_back(s.x, s.y);
    directions = precompute_directions<double>(positions, k.f);
  }

  std::vector<std::vector<BinKey>> chunk_keys(threads);
  std::vector<std::size_t> counts(n, 0);
  for_chunks(n, threads, [&](unsigned c, std::size_t begin, std::size_t end) {
    auto& out = chunk_keys[c];
    for (std::size_t i = begin; i < end; ++i) {
      const FlowSample& s = field.samples[i];
      if (!s.finite()) continue;
      std::vector<BinKey> votes;
      if (options.model == MotionModel::longuet_higgins) {
        votes = cast_votes(lh_line(s, k.f, directions[i]), grid, options.raster);
      } else {
        const auto thetas = perspective_thetas(s, k, grid);
        const auto curve = perspective_manifold<double>(s, k, thetas);
        votes = cast_votes_curve(curve, grid, options.raster);
      }
      counts[i] = votes.size();
      out.insert(out.end(), votes.begin(), votes.end());
    }
  });

  VoteTally tally;
  tally.offsets.resize(n + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), tally.offsets.begin() + 1);
  tally.keys.reserve(tally.offsets.back());
  for (auto& chunk : chunk_keys) {
    tally.keys.insert(tally.keys.end(), chunk.begin(), chunk.end());
    std::vector<BinKey>().swap(chunk);
  }

  std::vector<BinKey> sorted = tally.keys;
  parallel_sort(sorted, threads);
  const Mode mode = mode_of_sorted(sorted, grid);
  tally.winner = mode.winner;
  tally.winner_count = mode.count;
  return tally;
}

EstimateResult estimate_rotation(const FlowField& field, const BinGrid& grid,
                                 const EstimatorOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (field.empty()) throw DataError("estimate_rotation: empty flow field");

  const VoteTally tally = tally_votes(field, grid, options);

  EstimateResult result;
  result.winner = tally.winner;
  result.winner_count = tally.winner_count;
  result.rotation = grid.bin_center(tally.winner);
  result.vote_count = tally.keys.size();
  result.voting_flows = tally.voting_flows();
  result.inlier_mask.resize(field.size(), 0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    result.inlier_mask[i] = tally.voted_for(i, tally.winner) ? 1 : 0;
  }
  result.inlier_fraction =
      static_cast<double>(tally.winner_count) / static_cast<double>(result.voting_flows);
  result.elapsed = std::chrono::steady_clock::now() - start;
  return result;
}

}  // namespace rotvote
