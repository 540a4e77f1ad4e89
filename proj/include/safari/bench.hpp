#pragma once

#include <cstddef>
#include <vector>

#include "safari/engine.hpp"
#include "safari/linalg.hpp"

namespace safari {

struct ShiftTiming {
  std::size_t iteration = 0;
  double exact = 0.0;
  double approx = 0.0;
  std::vector<double> exact_seconds;   // one entry per repeat
  std::vector<double> approx_seconds;
  double exact_median_seconds = 0.0;
  double approx_median_seconds = 0.0;
};

struct ShiftBenchReport {
  std::vector<ShiftTiming> merges;
  std::size_t repeats = 0;
  /// Median over merges of each merge's median time.
  double exact_median_seconds = 0.0;
  double approx_median_seconds = 0.0;
  double exact_total_seconds = 0.0;   // sum of per-merge medians
  double approx_total_seconds = 0.0;
  double median_speedup = 0.0;        // exact_median / approx_median
  double total_speedup = 0.0;
  double mean_absolute_error = 0.0;
  double pearson_r = 0.0;
};

struct ShiftBenchOptions {
  std::size_t repeats = 10;
  /// Benchmark every `stride`-th merge only (1 = all).
  std::size_t stride = 1;
};

/// Replays the dendrogram's merges over `rows`. For each merge the exact path
/// takes the SVD of the dominant cluster and of the union and evaluates the
/// exact shift; the approximate path takes two spectral norms. Row gathering
/// is excluded from the timings.
ShiftBenchReport bench_shift(const Dendrogram& dendrogram, const Matrix& rows,
                             const ShiftBenchOptions& options = {});

double median_of(std::vector<double> values);

}  // namespace safari
