#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "safari/linalg.hpp"

namespace safari {

using ClusterId = std::uint32_t;

/// Span of a set of embeddings, held as its SVD: basis rows are the
/// sign-canonicalized right-singular vectors, paired with singular values.
struct SemanticFieldSubspace {
  Matrix basis;                 // k x d
  Vector singular_values;       // k, nonincreasing
  std::size_t member_count = 0;
  std::optional<ClusterId> source_cluster_id;
  std::optional<std::size_t> iteration_created;

  Eigen::Index rank() const { return singular_values.size(); }
  Eigen::Index dim() const { return basis.cols(); }
};

SemanticFieldSubspace build_sfs(const Matrix& members);

/// Per-index factors of the semantic shift between an old subspace and the
/// subspace of a superset. DIS = |sigma_i - sigma~_i|, DC = d_sem(v_i, v~_i*).
struct ShiftBreakdown {
  double total = 0.0;
  std::vector<double> dis_terms;
  std::vector<double> dc_terms;
  double dis_sum = 0.0;
  double dc_sum = 0.0;
};

/// Exact semantic shift from `old_space` to `new_space`. The sum runs over
/// the old subspace's rank; each old basis row is matched with its nearest
/// new basis row (lowest index on ties, matches may repeat).
ShiftBreakdown semantic_shift_exact(const SemanticFieldSubspace& old_space,
                                    const SemanticFieldSubspace& new_space);

/// ||a_y||_2 * sigma_max(a_x). `a_x` is the larger cluster's matrix.
double semantic_shift_approx(const Matrix& a_x, const Matrix& a_y);

struct WeylReport {
  double max_violation = 0.0;        // max(0, max_i gap_i - ||a_y||_2)
  double spectral_norm_y = 0.0;
  std::vector<double> per_index_gaps;  // |sigma_i(a_x) - sigma_i([a_x; a_y])|

  bool holds(double tol = 1e-9) const { return max_violation <= tol; }
};

/// Checks the singular-value perturbation bound for appending the rows of
/// `a_y` below `a_x`: every index-paired gap is at most ||a_y||_2.
WeylReport verify_weyl_bound(const Matrix& a_x, const Matrix& a_y);

/// True iff every row lies within semantic distance `epsilon` (strict) of
/// row `center_index`.
bool is_semantic_field(const Matrix& members, Eigen::Index center_index,
                       double epsilon);

}  // namespace safari
