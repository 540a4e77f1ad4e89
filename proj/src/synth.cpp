#include "safari/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "safari/error.hpp"

namespace safari {

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  // 1 - uniform() lies in (0, 1], keeping the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

Vector Rng::normal_vector(Eigen::Index d) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
  return v;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw_usage("Rng::below: bound must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

Vector perturb_direction(const Vector& parent, double angle, Rng& rng) {
  if (angle == 0.0) return parent.normalized();
  const Vector p = parent.normalized();
  Vector u;
  for (int attempt = 0; attempt < 16; ++attempt) {
    u = rng.normal_vector(p.size());
    u -= u.dot(p) * p;
    if (u.norm() > 1e-8) break;
  }
  if (!(u.norm() > 1e-8)) throw_numeric("perturb_direction: cannot find an orthogonal direction");
  u.normalize();
  return (std::cos(angle) * p + std::sin(angle) * u).normalized();
}

EmbeddingSet generate_hierarchy(const HierarchySpec& spec) {
  for (std::size_t b : spec.branching) {
    if (b == 0) throw_usage("generate_hierarchy: branching factors must be positive");
  }
  if (spec.d < 1) throw_usage("generate_hierarchy: dimension must be positive");
  if (spec.branching[0] > static_cast<std::size_t>(spec.d)) {
    throw_usage("generate_hierarchy: " + std::to_string(spec.branching[0]) +
                " orthogonal roots do not fit in dimension " + std::to_string(spec.d));
  }
  for (std::size_t i = 0; i < spec.angular_spread.size(); ++i) {
    if (!(spec.angular_spread[i] >= 0.0) || !std::isfinite(spec.angular_spread[i])) {
      throw_usage("generate_hierarchy: angular spreads must be finite and nonnegative");
    }
    if (i > 0 && spec.angular_spread[i] > spec.angular_spread[i - 1]) {
      throw_usage("generate_hierarchy: angular spreads must not grow from coarse to fine");
    }
  }
  if (!(spec.point_jitter >= 0.0) || !std::isfinite(spec.point_jitter)) {
    throw_usage("generate_hierarchy: point jitter must be finite and nonnegative");
  }

  Rng rng(spec.seed);
  const Eigen::Index d = spec.d;

  // Orthonormal roots via Gram-Schmidt on Gaussian draws.
  std::vector<Vector> roots;
  while (roots.size() < spec.branching[0]) {
    Vector v = rng.normal_vector(d);
    for (const Vector& r : roots) v -= v.dot(r) * r;
    if (v.norm() < 1e-6) continue;
    v.normalize();
    // Canonical sign, matching the orientation of subspace bases.
    Eigen::RowVectorXd row = v.transpose();
    canonicalize_sign(row);
    roots.push_back(row.transpose());
  }

  const std::size_t leaves =
      spec.branching[0] * spec.branching[1] * spec.branching[2] * spec.branching[3];
  std::vector<std::size_t> leaf_points(leaves, spec.points_per_leaf);
  if (spec.total_points) {
    const std::size_t total = *spec.total_points;
    for (std::size_t l = 0; l < leaves; ++l) {
      leaf_points[l] = total / leaves + (l < total % leaves ? 1 : 0);
    }
  }
  std::size_t n = 0;
  for (std::size_t c : leaf_points) n += c;
  if (n == 0) throw_usage("generate_hierarchy: no points requested");

  EmbeddingSet out;
  out.rows.resize(static_cast<Eigen::Index>(n), d);
  out.ids.emplace();
  std::vector<std::vector<std::string>> labels;
  labels.reserve(n);

  std::size_t row = 0;
  std::size_t leaf = 0;
  const double jitter_scale = spec.point_jitter / std::sqrt(static_cast<double>(d));
  for (std::size_t a = 0; a < spec.branching[0]; ++a) {
    const std::string l3 = "r" + std::to_string(a);
    for (std::size_t b = 0; b < spec.branching[1]; ++b) {
      const Vector dir2 = perturb_direction(roots[a], spec.angular_spread[0], rng);
      const std::string l2 = l3 + "." + std::to_string(b);
      for (std::size_t c = 0; c < spec.branching[2]; ++c) {
        const Vector dir1 = perturb_direction(dir2, spec.angular_spread[1], rng);
        const std::string l1 = l2 + "." + std::to_string(c);
        for (std::size_t e = 0; e < spec.branching[3]; ++e, ++leaf) {
          const Vector dir0 = perturb_direction(dir1, spec.angular_spread[2], rng);
          const std::string l0 = l1 + "." + std::to_string(e);
          for (std::size_t p = 0; p < leaf_points[leaf]; ++p, ++row) {
            Vector v = dir0;
            if (jitter_scale > 0.0) v += jitter_scale * rng.normal_vector(d);
            if (!(v.norm() > 0.0)) v = dir0;
            out.rows.row(static_cast<Eigen::Index>(row)) = v.normalized().transpose();
            out.ids->push_back("p" + std::to_string(row));
            labels.push_back({l0, l1, l2, l3});
          }
        }
      }
    }
  }
  out.labels = hierarchy_from_strings(labels);
  return out;
}

std::vector<double> planted_spike_trace(const SpikeTraceSpec& spec) {
  if (spec.length == 0) throw_usage("planted_spike_trace: length must be positive");
  if (!(spec.baseline_std >= 0.0)) throw_usage("planted_spike_trace: std must be nonnegative");
  std::vector<std::size_t> positions = spec.spike_positions;
  std::sort(positions.begin(), positions.end());
  if (std::adjacent_find(positions.begin(), positions.end()) != positions.end()) {
    throw_usage("planted_spike_trace: overlapping spike positions");
  }
  if (!positions.empty() && positions.back() >= spec.length) {
    throw_usage("planted_spike_trace: spike position " + std::to_string(positions.back()) +
                " outside trace of length " + std::to_string(spec.length));
  }
  Rng rng(spec.seed);
  std::vector<double> trace(spec.length);
  for (double& v : trace) v = spec.baseline_mean + spec.baseline_std * rng.normal();
  const double spike = spec.baseline_mean + spec.spike_sigma_multiple * spec.baseline_std;
  for (std::size_t p : positions) trace[p] = spike;
  return trace;
}

std::vector<std::size_t> evenly_spaced_positions(std::size_t length, std::size_t count) {
  std::vector<std::size_t> out;
  if (count == 0) return out;
  if (count > length) throw_usage("evenly_spaced_positions: more positions than slots");
  const double gap = static_cast<double>(length) / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(static_cast<std::size_t>(gap * (static_cast<double>(i) + 0.5)));
  }
  return out;
}

}  // namespace safari
