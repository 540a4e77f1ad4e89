#include "helpers.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace safari;
using testing::rows;
using testing::vec;

TEST_CASE("semantic_distance on axis vectors") {
  CHECK(semantic_distance(vec({1, 0}), vec({0, 1})) == doctest::Approx(1.0));
  CHECK(semantic_distance(vec({1, 0}), vec({1, 0})) == 0.0);
  CHECK(semantic_distance(vec({1, 0}), vec({-1, 0})) == 2.0);
}

TEST_CASE("semantic_distance is symmetric and scale invariant") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix m = oracle::gaussian_matrix(2, 7, seed);
    const Vector u = m.row(0).transpose();
    const Vector v = m.row(1).transpose();
    CHECK(semantic_distance(u, v) == semantic_distance(v, u));
    CHECK(semantic_distance(u, 3.5 * u) == doctest::Approx(0.0).epsilon(1e-12));
    const double d = semantic_distance(u, v);
    CHECK(d >= 0.0);
    CHECK(d <= 2.0);
    CHECK(d == doctest::Approx(oracle::cosine_distance(u, v)).epsilon(1e-12));
  }
}

TEST_CASE("semantic_distance rejects zero norm and dimension mismatch") {
  CHECK(testing::error_kind([] { semantic_distance(vec({0, 0}), vec({1, 0})); }) ==
        ErrorKind::numeric);
  CHECK(testing::error_kind([] { semantic_distance(vec({1, 0}), vec({1, 0, 0})); }) ==
        ErrorKind::usage);
}

TEST_CASE("svd of orthonormal rows") {
  const SvdResult r = svd(rows({{1, 0, 0}, {0, 1, 0}}));
  REQUIRE(r.rank() == 2);
  CHECK(r.singular_values[0] == doctest::Approx(1.0));
  CHECK(r.singular_values[1] == doctest::Approx(1.0));
  // The basis spans e1, e2: no weight on e3 and the rows are orthonormal.
  CHECK(r.right_basis.col(2).norm() == doctest::Approx(0.0).epsilon(1e-12));
  const Matrix gram = r.right_basis * r.right_basis.transpose();
  CHECK((gram - Matrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("svd of duplicate rows is rank one") {
  const SvdResult r = svd(rows({{1, 0}, {1, 0}}));
  REQUIRE(r.rank() == 1);
  CHECK(r.singular_values[0] == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.right_basis(0, 0) == doctest::Approx(1.0));
  CHECK(r.right_basis(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("svd reconstruction matches a Jacobi reference on a 5x3 matrix") {
  const Matrix m = oracle::gaussian_matrix(5, 3, 11);
  const SvdResult r = svd(m, kDefaultRankTolerance, true);
  REQUIRE(r.left_factors);
  const Matrix rebuilt = *r.left_factors * r.singular_values.asDiagonal() * r.right_basis;
  CHECK((m - rebuilt).norm() <= 1e-6 * m.norm());

  const oracle::JacobiSvd ref = oracle::jacobi_svd(m);
  REQUIRE(r.rank() == 3);
  Matrix ref_basis = ref.v_rows;
  oracle::canonicalize(ref_basis);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(r.singular_values[i] == doctest::Approx(ref.sigma[static_cast<std::size_t>(i)]).epsilon(1e-10));
  }
  CHECK((r.right_basis - ref_basis).norm() < 1e-8);
}

TEST_CASE("svd invariants on random shapes") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto n = static_cast<Eigen::Index>(1 + seed % 9);
    const auto d = static_cast<Eigen::Index>(1 + (seed * 7) % 11);
    const Matrix m = oracle::gaussian_matrix(n, d, seed);
    const SvdResult r = svd(m);
    CHECK(r.rank() <= std::min(n, d));
    for (Eigen::Index i = 0; i < r.rank(); ++i) {
      CHECK(r.singular_values[i] >= 0.0);
      if (i > 0) CHECK(r.singular_values[i] <= r.singular_values[i - 1]);
      Eigen::RowVectorXd row = r.right_basis.row(i);
      CHECK_FALSE(canonicalize_sign(row));
    }
    const Matrix gram = r.right_basis * r.right_basis.transpose();
    CHECK((gram - Matrix::Identity(r.rank(), r.rank())).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("svd truncates numerically dependent directions") {
  // 50 rows in a rank-3 subspace of R^16.
  const Matrix factor = oracle::gaussian_matrix(3, 16, 5);
  const Matrix coeffs = oracle::gaussian_matrix(50, 3, 6);
  const SvdResult r = svd(coeffs * factor);
  CHECK(r.rank() == 3);
}

TEST_CASE("svd is byte-deterministic") {
  const Matrix m = oracle::gaussian_matrix(20, 9, 3);
  const SvdResult a = svd(m);
  const SvdResult b = svd(m);
  CHECK(a.singular_values == b.singular_values);
  CHECK(a.right_basis == b.right_basis);
}

TEST_CASE("svd errors") {
  Matrix bad = rows({{1, 0}, {0, 1}});
  bad(1, 1) = std::nan("");
  CHECK(testing::error_kind([&] { svd(bad); }) == ErrorKind::numeric);
  CHECK(testing::error_kind([] { svd(Matrix(0, 3)); }) == ErrorKind::usage);
  CHECK(testing::error_kind([] { svd(rows({{1.0}}), 0.0); }) == ErrorKind::usage);
}

TEST_CASE("canonicalize_sign picks the lowest index on magnitude ties") {
  Eigen::RowVectorXd row(3);
  row << -0.5, 0.5, 0.1;
  CHECK(canonicalize_sign(row));
  CHECK(row[0] == 0.5);
  row << 0.5, -0.5, 0.1;
  CHECK_FALSE(canonicalize_sign(row));
}

TEST_CASE("spectral_norm small closed forms") {
  CHECK(spectral_norm(Matrix::Identity(2, 2)) == doctest::Approx(1.0));
  CHECK(spectral_norm(rows({{3, 0}, {0, 1}})) == doctest::Approx(3.0));
  CHECK(spectral_norm(rows({{0, 2}, {0, 0}})) == doctest::Approx(2.0));
  CHECK(spectral_norm(rows({{3, 4}})) == doctest::Approx(5.0));
  CHECK(spectral_norm(rows({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}})) == 0.0);
}

TEST_CASE("spectral_norm agrees with the largest singular value") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto n = static_cast<Eigen::Index>(1 + seed % 13);
    const auto d = static_cast<Eigen::Index>(1 + (seed * 5) % 17);
    const Matrix m = oracle::gaussian_matrix(n, d, 100 + seed);
    const double ref = oracle::jacobi_svd(m).sigma.front();
    CHECK(spectral_norm(m) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("spectral_norm on a zero-sum matrix falls back to a data row") {
  // Column sums vanish, so the default start vector is zero.
  const Matrix m = rows({{1, -1, 0}, {-1, 1, 0}, {0, 0, 0.5}, {0, 0, -0.5}});
  CHECK(spectral_norm(m) == doctest::Approx(2.0));
}

TEST_CASE("stack_rows and gather_rows") {
  const Matrix a = rows({{1, 2}, {3, 4}});
  const Matrix b = rows({{5, 6}});
  const Matrix s = stack_rows(a, b);
  CHECK(s.rows() == 3);
  CHECK(s(2, 1) == 6);
  const std::vector<std::size_t> idx{2, 0};
  const Matrix g = gather_rows(s, idx);
  CHECK(g(0, 0) == 5);
  CHECK(g(1, 1) == 2);
  CHECK(testing::error_kind([&] { stack_rows(a, rows({{1, 2, 3}})); }) == ErrorKind::usage);
}
