#include "helpers.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

#include "safari/eval.hpp"
#include "safari/synth.hpp"

using namespace safari;
using testing::rows;
using testing::vec;

TEST_CASE("impurity examples") {
  // Classes wholly inside single clusters, mixed together in one.
  const std::vector<ClusterId> same{0, 0, 0, 0};
  const std::vector<LabelId> ab{0, 0, 1, 1};
  CHECK(impurity(same, ab) == 0.0);

  const std::vector<ClusterId> split{0, 0, 1, 1};
  const std::vector<LabelId> one{0, 0, 0, 0};
  CHECK(impurity(split, one) == doctest::Approx(0.5));

  const std::vector<ClusterId> a6{0, 0, 0, 1, 2, 3};
  const std::vector<LabelId> l6{0, 0, 0, 0, 1, 1};
  CHECK(impurity(a6, l6) == doctest::Approx(0.375));

  const std::vector<LabelId> empty;
  const std::vector<ClusterId> none;
  CHECK(testing::error_kind([&] { impurity(none, empty); }) == ErrorKind::usage);
  CHECK(testing::error_kind([&] { impurity(same, l6); }) == ErrorKind::usage);
}

TEST_CASE("impurity matches the nested-loop oracle") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng.below(60));
    std::vector<ClusterId> assignment(n);
    std::vector<LabelId> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      assignment[i] = static_cast<ClusterId>(rng.below(6));
      labels[i] = static_cast<LabelId>(rng.below(4));
    }
    const std::vector<std::uint32_t> a32(assignment.begin(), assignment.end());
    CHECK(impurity(assignment, labels) == doctest::Approx(oracle::impurity(a32, labels)).epsilon(1e-12));
  }
}

TEST_CASE("impurity curve endpoints") {
  HierarchySpec spec;
  spec.branching = {2, 2, 2, 2};
  spec.points_per_leaf = 3;
  spec.d = 16;
  const EmbeddingSet set = generate_hierarchy(spec);
  const Dendrogram d = run_safari(set, SafariConfig{}).dendrogram;
  const std::vector<std::size_t> its{0, d.events.size()};
  const ImpurityCurve c = impurity_curve(d, *set.labels, its);
  REQUIRE(c.per_level.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    std::map<LabelId, double> sizes;
    for (LabelId l : set.labels->levels[k]) sizes[l] += 1.0;
    double expected = 0.0;
    for (const auto& [l, s] : sizes) expected += 1.0 - 1.0 / s;
    expected /= static_cast<double>(sizes.size());
    CHECK(c.per_level[k][0] == doctest::Approx(expected));
    CHECK(c.per_level[k][1] == 0.0);
  }
  const std::vector<std::size_t> bad{d.events.size() + 1};
  CHECK(testing::error_kind([&] { impurity_curve(d, *set.labels, bad); }) == ErrorKind::usage);
}

TEST_CASE("evenly spaced iterations") {
  CHECK(evenly_spaced_iterations(10, 3) == std::vector<std::size_t>{0, 5, 10});
  CHECK(evenly_spaced_iterations(100, 2) == std::vector<std::size_t>{0, 100});
  CHECK(evenly_spaced_iterations(2, 5) == std::vector<std::size_t>{0, 1, 2});
  const auto twenty = evenly_spaced_iterations(404, 20);
  CHECK(twenty.size() == 20);
  CHECK(twenty.front() == 0);
  CHECK(twenty.back() == 404);
}

TEST_CASE("train_class_sfs") {
  const std::vector<LabelId> single{7};
  const ClassModels one = train_class_sfs(rows({{1, 0, 0}}), single);
  REQUIRE(one.size() == 1);
  CHECK(one.at(7).rank() == 1);

  const std::vector<LabelId> two{0, 0, 1, 1};
  const ClassModels m = train_class_sfs(rows({{1, 0, 0}, {2, 0, 0}, {0, 1, 0}, {0, 3, 0}}), two);
  REQUIRE(m.size() == 2);
  CHECK(std::abs(m.at(0).basis.row(0).dot(m.at(1).basis.row(0))) < 1e-12);

  const std::vector<LabelId> mismatch{0};
  CHECK(testing::error_kind([&] { train_class_sfs(rows({{1, 0}, {0, 1}}), mismatch); }) ==
        ErrorKind::usage);
}

TEST_CASE("class subspaces recover the generating directions") {
  HierarchySpec spec;
  spec.branching = {5, 1, 1, 1};
  spec.points_per_leaf = 200;
  spec.d = 32;
  spec.angular_spread = {0.0, 0.0, 0.0};
  spec.point_jitter = 0.3;
  spec.seed = 12;
  const EmbeddingSet set = generate_hierarchy(spec);
  const std::vector<LabelId>& cls = set.labels->levels[3];
  const ClassModels models = train_class_sfs(set.rows, cls);
  REQUIRE(models.size() == 5);

  // With zero spread every item's direction is its root plus jitter; the
  // class mean is the best available estimate of the root.
  for (const auto& [label, s] : models) {
    Vector mean = Vector::Zero(spec.d);
    for (std::size_t i = 0; i < cls.size(); ++i) {
      if (cls[i] == label) mean += set.rows.row(static_cast<Eigen::Index>(i)).transpose();
    }
    CHECK(semantic_distance(s.basis.row(0).transpose(), mean) <= 0.05);
  }
}

TEST_CASE("classify examples") {
  const std::vector<LabelId> labels{0, 1};
  const ClassModels m = train_class_sfs(rows({{1, 0}, {0, 1}}), labels);
  CHECK(classify(vec({1, 0}), m) == 0);
  CHECK(classify(vec({0, 2}), m) == 1);
  // Equidistant from both classes.
  CHECK(classify(vec({1, 1}), m) == 0);
  ClassifyOptions top{DistanceMode::top_fraction, 0.05};
  CHECK(classify(vec({1, 1}), m, top) == 0);
  CHECK(testing::error_kind([&] { classify(vec({0, 0}), m); }) == ErrorKind::numeric);
  CHECK(testing::error_kind([&] { classify(vec({1, 0}), ClassModels{}); }) == ErrorKind::usage);
}

TEST_CASE("subspace distance weights") {
  const SemanticFieldSubspace s = build_sfs(rows({{3, 0, 0}, {0, 1, 0}}));
  const Vector x = vec({0, 0, 1});
  // Both basis rows are orthogonal to x.
  CHECK(subspace_distance(x, s, {}) == doctest::Approx(1.0));
  const Vector e1 = vec({1, 0, 0});
  CHECK(subspace_distance(e1, s, {}) == doctest::Approx(0.25));
  CHECK(subspace_distance(e1, s, {DistanceMode::top_fraction, 0.05}) == doctest::Approx(0.0));
  CHECK(subspace_distance(e1, s, {DistanceMode::top_fraction, 1.0}) == doctest::Approx(0.5));
  CHECK(testing::error_kind([&] {
          subspace_distance(e1, s, {DistanceMode::top_fraction, 0.0});
        }) == ErrorKind::usage);
}

TEST_CASE("classification is invariant to input scale") {
  const Matrix train = oracle::gaussian_matrix(30, 6, 1);
  std::vector<LabelId> labels(30);
  for (std::size_t i = 0; i < 30; ++i) labels[i] = static_cast<LabelId>(i % 3);
  const ClassModels m = train_class_sfs(train, labels);
  const Matrix test = oracle::gaussian_matrix(20, 6, 2);
  for (Eigen::Index r = 0; r < test.rows(); ++r) {
    const Vector x = test.row(r).transpose();
    CHECK(classify(x, m) == classify(Vector(4.0 * x), m));
  }
}

TEST_CASE("prf1_macro examples") {
  const std::vector<LabelId> t{0, 1, 0, 1};
  const MacroReport perfect = prf1_macro(t, t);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);

  const std::vector<LabelId> all0{0, 0, 0, 0};
  const MacroReport r = prf1_macro(all0, t);
  CHECK(r.per_class.at(0).precision == doctest::Approx(0.5));
  CHECK(r.per_class.at(0).recall == 1.0);
  CHECK(r.per_class.at(1).precision == 0.0);
  CHECK(r.f1 == doctest::Approx(1.0 / 3.0));

  const std::vector<LabelId> empty;
  CHECK(testing::error_kind([&] { prf1_macro(empty, empty); }) == ErrorKind::usage);
  CHECK(testing::error_kind([&] { prf1_macro(all0, empty); }) == ErrorKind::usage);
}

TEST_CASE("pearson examples") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> neg{-1, -2, -3};
  const std::vector<double> b{1, 2, 4};
  CHECK(pearson(a, a) == doctest::Approx(1.0));
  CHECK(pearson(a, neg) == doctest::Approx(-1.0));
  // cov = 3/2, var a = 1, var b = 7/3.
  CHECK(pearson(a, b) == doctest::Approx(1.5 / std::sqrt(7.0 / 3.0)));
  CHECK(pearson(a, b) == doctest::Approx(0.9820).epsilon(1e-4));
  const std::vector<double> flat{2, 2, 2};
  CHECK(testing::error_kind([&] { pearson(a, flat); }) == ErrorKind::numeric);
}
