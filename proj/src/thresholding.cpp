#include "safari/thresholding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safari/error.hpp"

namespace safari {

std::size_t default_min_observations(std::size_t window_size) {
  return std::max<std::size_t>(2, (window_size + 3) / 4);
}

SlidingWindowTracker::SlidingWindowTracker(std::size_t window_size,
                                           double multiplier,
                                           std::size_t min_observations)
    : window_size_(window_size),
      multiplier_(multiplier),
      min_observations_(min_observations) {
  if (window_size_ < 2) throw_usage("window size must be at least 2");
  if (!std::isfinite(multiplier_) || multiplier_ < 0.0) {
    throw_usage("multiplier must be finite and nonnegative");
  }
  if (min_observations_ < 1) throw_usage("min_observations must be at least 1");
}

SlidingWindowTracker::SlidingWindowTracker(std::size_t window_size, double multiplier)
    : SlidingWindowTracker(window_size, multiplier,
                           default_min_observations(window_size)) {}

bool SlidingWindowTracker::is_significant(double value) const {
  if (!std::isfinite(value)) throw_numeric("is_significant: non-finite value");
  if (observation_count_ < min_observations_) return false;
  return value > mu_ + multiplier_ * tau_;
}

void SlidingWindowTracker::observe(double value) {
  if (!std::isfinite(value)) throw_numeric("observe: non-finite value");
  ring_.push_back(value);
  if (ring_.size() > window_size_) ring_.pop_front();
  ++observation_count_;

  // Two-pass recompute keeps mu/tau exact for the current ring contents.
  double sum = 0.0;
  for (double v : ring_) sum += v;
  mu_ = sum / static_cast<double>(ring_.size());
  if (ring_.size() < 2) {
    tau_ = 0.0;
    return;
  }
  double ss = 0.0;
  for (double v : ring_) ss += (v - mu_) * (v - mu_);
  tau_ = std::sqrt(ss / static_cast<double>(ring_.size() - 1));
}

double mean_of(std::span<const double> values) {
  if (values.empty()) throw_usage("mean of an empty sequence");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw_usage("percentile of an empty sequence");
  if (!(q >= 0.0 && q <= 1.0)) throw_usage("percentile rank must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

struct Moments {
  double mean;
  double stddev;
};

Moments moments(std::span<const double> values) {
  return {mean_of(values), sample_stddev(values)};
}

void split(std::span<const double> all, std::size_t begin, std::size_t end,
           std::size_t min_window_size, double alpha,
           std::vector<std::pair<std::size_t, std::size_t>>& out) {
  const std::size_t len = end - begin;
  const std::size_t mid = begin + len / 2;
  const std::size_t n_left = mid - begin;
  const std::size_t n_right = end - mid;
  if (n_left >= min_window_size && n_right >= min_window_size) {
    const Moments left = moments(all.subspan(begin, n_left));
    const Moments right = moments(all.subspan(mid, n_right));
    const double pooled_var =
        ((static_cast<double>(n_left) - 1.0) * left.stddev * left.stddev +
         (static_cast<double>(n_right) - 1.0) * right.stddev * right.stddev) /
        (static_cast<double>(len) - 2.0);
    const double pooled = std::sqrt(pooled_var);
    if (std::abs(left.mean - right.mean) > alpha * pooled) {
      split(all, begin, mid, min_window_size, alpha, out);
      split(all, mid, end, min_window_size, alpha, out);
      return;
    }
  }
  out.emplace_back(begin, end);
}

}  // namespace

SegmentationResult segment_shifts(std::span<const double> sequence,
                                  std::size_t min_window_size,
                                  double imbalance_alpha, double multiplier) {
  if (sequence.empty()) throw_usage("segment_shifts: empty sequence");
  if (min_window_size < 2) throw_usage("segment_shifts: min_window_size must be at least 2");
  if (!std::isfinite(imbalance_alpha) || imbalance_alpha < 0.0) {
    throw_usage("segment_shifts: imbalance alpha must be finite and nonnegative");
  }
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (!std::isfinite(sequence[i])) {
      throw_numeric("segment_shifts: non-finite value at index " + std::to_string(i));
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  split(sequence, 0, sequence.size(), min_window_size, imbalance_alpha, ranges);

  SegmentationResult result;
  for (const auto& [begin, end] : ranges) {
    const Moments m = moments(sequence.subspan(begin, end - begin));
    Segment seg{begin, end, m.mean, m.stddev, m.mean + multiplier * m.stddev};
    for (std::size_t i = begin; i < end; ++i) {
      if (sequence[i] > seg.threshold) result.significant.push_back(i);
    }
    result.segments.push_back(seg);
  }
  return result;
}

UniformityMetrics uniformity_metrics(std::span<const double> detected_values) {
  if (detected_values.empty()) throw_usage("uniformity_metrics: no detected values");
  for (double v : detected_values) {
    if (!(v > 0.0)) throw_numeric("uniformity_metrics: ratios need strictly positive values");
  }
  UniformityMetrics m;
  m.cv = sample_stddev(detected_values) / mean_of(detected_values);
  const auto [lo, hi] = std::minmax_element(detected_values.begin(), detected_values.end());
  m.max_min_ratio = *hi / *lo;
  m.p90_p10 = percentile(detected_values, 0.9) / percentile(detected_values, 0.1);
  return m;
}

}  // namespace safari
