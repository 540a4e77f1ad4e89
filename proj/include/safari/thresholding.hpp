#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace safari {

inline constexpr double kDefaultMultiplier = 3.0;
inline constexpr std::size_t kDefaultMinWindowSize = 100;
inline constexpr double kDefaultImbalanceAlpha = 1.0;

/// max(2, ceil(w / 4)).
std::size_t default_min_observations(std::size_t window_size);

/// Mean and sample (n - 1) standard deviation of the last `w` observations.
/// A value is significant when it strictly exceeds mu + m * tau, and only once
/// `min_observations` values have been seen.
class SlidingWindowTracker {
 public:
  SlidingWindowTracker(std::size_t window_size, double multiplier,
                       std::size_t min_observations);
  explicit SlidingWindowTracker(std::size_t window_size,
                                double multiplier = kDefaultMultiplier);

  bool is_significant(double value) const;
  void observe(double value);

  double mu() const { return mu_; }
  double tau() const { return tau_; }
  double threshold() const { return mu_ + multiplier_ * tau_; }
  double multiplier() const { return multiplier_; }
  std::size_t window_size() const { return window_size_; }
  std::size_t min_observations() const { return min_observations_; }
  std::size_t observation_count() const { return observation_count_; }
  const std::deque<double>& ring() const { return ring_; }

 private:
  std::size_t window_size_;
  double multiplier_;
  std::size_t min_observations_;
  std::deque<double> ring_;
  double mu_ = 0.0;
  double tau_ = 0.0;
  std::size_t observation_count_ = 0;
};

struct Segment {
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  double mean = 0.0;
  double stddev = 0.0;
  double threshold = 0.0;
};

struct SegmentationResult {
  std::vector<Segment> segments;       // ordered, partitions [0, n)
  std::vector<std::size_t> significant;  // ascending indices
};

/// Offline recursive midpoint segmentation. A segment splits when both halves
/// hold at least `min_window_size` values and their means differ by more than
/// `imbalance_alpha` pooled standard deviations. Within each final segment,
/// values above mean + multiplier * std are flagged.
SegmentationResult segment_shifts(std::span<const double> sequence,
                                  std::size_t min_window_size = kDefaultMinWindowSize,
                                  double imbalance_alpha = kDefaultImbalanceAlpha,
                                  double multiplier = kDefaultMultiplier);

struct UniformityMetrics {
  double cv = 0.0;
  double max_min_ratio = 0.0;
  double p90_p10 = 0.0;
};

UniformityMetrics uniformity_metrics(std::span<const double> detected_values);

double mean_of(std::span<const double> values);
/// Sample standard deviation; 0 for fewer than two values.
double sample_stddev(std::span<const double> values);
/// Linear-interpolation percentile, q in [0, 1].
double percentile(std::span<const double> values, double q);

}  // namespace safari
