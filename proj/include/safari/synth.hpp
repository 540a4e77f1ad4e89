#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "safari/embedding_set.hpp"

namespace safari {

/// Portable random stream: std::mt19937_64 (whose output sequence the
/// standard fixes) with hand-written uniform and Box-Muller normal draws, so
/// a seed yields the same values on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();
  Vector normal_vector(Eigen::Index d);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Unit vector at exactly `angle` radians from the unit vector `parent`,
/// rotated toward a random direction orthogonal to it.
Vector perturb_direction(const Vector& parent, double angle, Rng& rng);

struct HierarchySpec {
  /// Children per node, coarse to fine: roots (Lv3), then Lv2, Lv1, Lv0.
  std::array<std::size_t, 4> branching{3, 3, 3, 3};
  std::size_t points_per_leaf = 5;
  /// When set, overrides points_per_leaf: points are dealt to leaves
  /// round-robin until this many exist.
  std::optional<std::size_t> total_points;
  Eigen::Index d = 64;
  /// Angle of each Lv2, Lv1 and Lv0 node from its parent direction.
  std::array<double, 3> angular_spread{0.7, 0.4, 0.2};
  /// Norm scale of the Gaussian jitter added to a leaf direction per point.
  double point_jitter = 0.1;
  std::uint64_t seed = 0;
};

/// Unit-norm embeddings with four nested label levels (Lv0 finest). Roots are
/// mutually orthogonal and sign-canonical; each child direction sits at its level's angle from
/// the parent.
EmbeddingSet generate_hierarchy(const HierarchySpec& spec);

struct SpikeTraceSpec {
  std::size_t length = 5000;
  double baseline_mean = 1.0;
  double baseline_std = 0.4;
  std::vector<std::size_t> spike_positions;
  double spike_sigma_multiple = 5.0;
  std::uint64_t seed = 0;
};

/// Gaussian baseline with exact spikes at baseline_mean + multiple * std.
std::vector<double> planted_spike_trace(const SpikeTraceSpec& spec);

/// `count` positions spaced evenly through [0, length), offset by half a gap.
std::vector<std::size_t> evenly_spaced_positions(std::size_t length, std::size_t count);

}  // namespace safari
