#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Core>

namespace safari {

/// Dense matrix with one embedding vector per row.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Vector>;

inline constexpr double kDefaultRankTolerance = 1e-10;

/// Throws unless `m` has at least one row and column and only finite entries.
void require_valid(const Matrix& m);

/// 1 - cos(u, v), clamped to [0, 2]. Throws ErrorKind::numeric on a
/// zero-norm argument.
double semantic_distance(VectorRef u, VectorRef v);

struct SvdResult {
  Vector singular_values;               // k entries, nonincreasing
  Matrix right_basis;                   // k x d, orthonormal rows
  std::optional<Matrix> left_factors;   // n x k, only when requested

  Eigen::Index rank() const { return singular_values.size(); }
};

/// Thin SVD of `m` truncated to its numerical rank: singular values at or
/// below `tolerance * sigma_max` are dropped. Each basis row is
/// sign-canonicalized (see canonicalize_sign).
SvdResult svd(const Matrix& m, double tolerance = kDefaultRankTolerance,
              bool keep_left = false);

/// Flips `row` so its largest-magnitude coordinate (lowest index on ties) is
/// positive. Returns true when the row was negated.
bool canonicalize_sign(Eigen::Ref<Eigen::RowVectorXd> row);

/// Largest singular value. Closed form for one or two rows (or columns),
/// power iteration on the Gram operator otherwise.
double spectral_norm(const Matrix& m);

inline constexpr int kPowerIterationMaxIterations = 1000;
inline constexpr double kPowerIterationTolerance = 1e-10;

/// Rows of `source` listed by `indices`, in that order.
template <typename IndexRange>
Matrix gather_rows(const Matrix& source, const IndexRange& indices) {
  Matrix out(static_cast<Eigen::Index>(std::size(indices)), source.cols());
  Eigen::Index r = 0;
  for (auto idx : indices) out.row(r++) = source.row(static_cast<Eigen::Index>(idx));
  return out;
}

/// Vertical concatenation: rows of `top` followed by rows of `bottom`.
Matrix stack_rows(const Matrix& top, const Matrix& bottom);

}  // namespace safari
