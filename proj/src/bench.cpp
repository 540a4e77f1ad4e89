#include "safari/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "safari/error.hpp"
#include "safari/eval.hpp"
#include "safari/sfs.hpp"

namespace safari {

double median_of(std::vector<double> values) {
  if (values.empty()) throw_usage("median_of: empty input");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

ShiftBenchReport bench_shift(const Dendrogram& dendrogram, const Matrix& rows,
                             const ShiftBenchOptions& options) {
  if (options.repeats == 0) throw_usage("bench_shift: repeats must be at least 1");
  if (options.stride == 0) throw_usage("bench_shift: stride must be at least 1");
  if (static_cast<std::size_t>(rows.rows()) != dendrogram.n_leaves) {
    throw_usage("bench_shift: embedding rows do not match the dendrogram's leaf count");
  }

  ShiftBenchReport report;
  report.repeats = options.repeats;
  replay_merges(dendrogram, [&](const MergeEvent& ev, std::span<const std::size_t> dominant,
                                std::span<const std::size_t> other,
                                std::span<const std::size_t> merged) {
    if ((ev.iteration - 1) % options.stride != 0) return;
    const Matrix a_x = gather_rows(rows, dominant);
    const Matrix a_y = gather_rows(rows, other);
    const Matrix a_new = gather_rows(rows, merged);

    ShiftTiming timing;
    timing.iteration = ev.iteration;
    for (std::size_t r = 0; r < options.repeats; ++r) {
      auto start = Clock::now();
      const SemanticFieldSubspace old_space = build_sfs(a_x);
      const SemanticFieldSubspace new_space = build_sfs(a_new);
      const double exact = semantic_shift_exact(old_space, new_space).total;
      timing.exact_seconds.push_back(seconds_since(start));

      start = Clock::now();
      const double approx = semantic_shift_approx(a_x, a_y);
      timing.approx_seconds.push_back(seconds_since(start));

      timing.exact = exact;
      timing.approx = approx;
    }
    timing.exact_median_seconds = median_of(timing.exact_seconds);
    timing.approx_median_seconds = median_of(timing.approx_seconds);
    report.merges.push_back(std::move(timing));
  });
  if (report.merges.empty()) throw_usage("bench_shift: no merges to benchmark");

  std::vector<double> exact_medians, approx_medians, exact_values, approx_values;
  double abs_error = 0.0;
  for (const ShiftTiming& t : report.merges) {
    exact_medians.push_back(t.exact_median_seconds);
    approx_medians.push_back(t.approx_median_seconds);
    exact_values.push_back(t.exact);
    approx_values.push_back(t.approx);
    report.exact_total_seconds += t.exact_median_seconds;
    report.approx_total_seconds += t.approx_median_seconds;
    abs_error += std::abs(t.exact - t.approx);
  }
  report.exact_median_seconds = median_of(exact_medians);
  report.approx_median_seconds = median_of(approx_medians);
  report.median_speedup = report.approx_median_seconds > 0.0
                              ? report.exact_median_seconds / report.approx_median_seconds
                              : 0.0;
  report.total_speedup = report.approx_total_seconds > 0.0
                             ? report.exact_total_seconds / report.approx_total_seconds
                             : 0.0;
  report.mean_absolute_error = abs_error / static_cast<double>(report.merges.size());
  report.pearson_r = report.merges.size() >= 2 ? pearson(exact_values, approx_values) : 0.0;
  return report;
}

}  // namespace safari
