#include "helpers.hpp"
#include "oracles.hpp"

#include "safari/bench.hpp"
#include "safari/eval.hpp"
#include "safari/synth.hpp"

using namespace safari;

TEST_CASE("median_of") {
  CHECK(median_of({3.0}) == 3.0);
  CHECK(median_of({4.0, 1.0, 3.0}) == 3.0);
  CHECK(median_of({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(testing::error_kind([] { median_of({}); }) == ErrorKind::usage);
}

TEST_CASE("bench_shift reproduces the engine's shift values") {
  HierarchySpec spec;
  spec.branching = {2, 2, 2, 2};
  spec.points_per_leaf = 4;
  spec.d = 16;
  const EmbeddingSet set = generate_hierarchy(spec);
  SafariConfig config;
  config.shift_mode = ShiftMode::both;
  config.window_size = 10;
  const Dendrogram d = run_safari(set, config).dendrogram;

  ShiftBenchOptions options;
  options.repeats = 3;
  const ShiftBenchReport r = bench_shift(d, set.rows, options);
  REQUIRE(r.merges.size() == d.events.size());
  CHECK(r.repeats == 3);
  std::vector<double> exact, approx;
  for (std::size_t t = 0; t < r.merges.size(); ++t) {
    const ShiftTiming& m = r.merges[t];
    CHECK(m.iteration == t + 1);
    CHECK(m.exact_seconds.size() == 3);
    CHECK(m.exact == doctest::Approx(d.events[t].exact->total).epsilon(1e-12));
    CHECK(m.approx == doctest::Approx(*d.events[t].approx).epsilon(1e-12));
    exact.push_back(m.exact);
    approx.push_back(m.approx);
  }
  CHECK(r.pearson_r == doctest::Approx(pearson(exact, approx)));
  CHECK(r.median_speedup > 0.0);
  CHECK(r.exact_total_seconds >= r.exact_median_seconds);

  options.stride = 5;
  options.repeats = 1;
  const ShiftBenchReport strided = bench_shift(d, set.rows, options);
  CHECK(strided.merges.size() == (d.events.size() + 4) / 5);
  CHECK(strided.merges[1].iteration == 6);
  CHECK(strided.merges[0].exact_seconds.size() == 1);
}

TEST_CASE("bench_shift errors") {
  const Matrix m = oracle::gaussian_matrix(6, 3, 1);
  const Dendrogram d = run_safari(EmbeddingSet{m, {}, {}}, SafariConfig{}).dendrogram;
  ShiftBenchOptions zero;
  zero.repeats = 0;
  CHECK(testing::error_kind([&] { bench_shift(d, m, zero); }) == ErrorKind::usage);
  CHECK(testing::error_kind([&] { bench_shift(d, m.topRows(5)); }) == ErrorKind::usage);
}
