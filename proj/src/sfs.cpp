#include "safari/sfs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safari/error.hpp"

namespace safari {

SemanticFieldSubspace build_sfs(const Matrix& members) {
  SvdResult dec = svd(members);
  SemanticFieldSubspace out;
  out.basis = std::move(dec.right_basis);
  out.singular_values = std::move(dec.singular_values);
  out.member_count = static_cast<std::size_t>(members.rows());
  return out;
}

ShiftBreakdown semantic_shift_exact(const SemanticFieldSubspace& old_space,
                                    const SemanticFieldSubspace& new_space) {
  if (old_space.dim() != new_space.dim()) {
    throw_usage("semantic_shift_exact: ambient dimension mismatch (" +
                std::to_string(old_space.dim()) + " vs " +
                std::to_string(new_space.dim()) + ")");
  }
  const Eigen::Index k_old = old_space.rank();
  const Eigen::Index k_new = new_space.rank();
  if (k_new < k_old) {
    throw_usage("semantic_shift_exact: merged subspace rank " +
                std::to_string(k_new) + " is below the contained rank " +
                std::to_string(k_old));
  }

  ShiftBreakdown out;
  out.dis_terms.resize(static_cast<std::size_t>(k_old));
  out.dc_terms.resize(static_cast<std::size_t>(k_old));
  if (k_old == 0) return out;

  // Cosines between every old and new basis row.
  const Matrix cosines = old_space.basis * new_space.basis.transpose();
  const Vector old_norms = old_space.basis.rowwise().norm();
  const Vector new_norms = new_space.basis.rowwise().norm();

  for (Eigen::Index i = 0; i < k_old; ++i) {
    double best = 3.0;
    for (Eigen::Index j = 0; j < k_new; ++j) {
      const double d = std::clamp(
          1.0 - cosines(i, j) / (old_norms[i] * new_norms[j]), 0.0, 2.0);
      if (d < best) best = d;
    }
    const double dis = std::abs(old_space.singular_values[i] -
                                new_space.singular_values[i]);
    out.dis_terms[static_cast<std::size_t>(i)] = dis;
    out.dc_terms[static_cast<std::size_t>(i)] = best;
    out.dis_sum += dis;
    out.dc_sum += best;
    out.total += dis * best;
  }
  return out;
}

double semantic_shift_approx(const Matrix& a_x, const Matrix& a_y) {
  if (a_x.cols() != a_y.cols()) {
    throw_usage("semantic_shift_approx: column mismatch (" +
                std::to_string(a_x.cols()) + " vs " + std::to_string(a_y.cols()) + ")");
  }
  if (a_x.rows() < a_y.rows()) {
    throw_usage("semantic_shift_approx: the larger cluster must come first");
  }
  return spectral_norm(a_y) * spectral_norm(a_x);
}

WeylReport verify_weyl_bound(const Matrix& a_x, const Matrix& a_y) {
  if (a_x.cols() != a_y.cols()) {
    throw_usage("verify_weyl_bound: column mismatch (" +
                std::to_string(a_x.cols()) + " vs " + std::to_string(a_y.cols()) + ")");
  }
  const Vector sigma_x = svd(a_x).singular_values;
  const Vector sigma_stack = svd(stack_rows(a_x, a_y)).singular_values;
  const Vector sigma_y = svd(a_y).singular_values;

  WeylReport report;
  report.spectral_norm_y = sigma_y.size() > 0 ? sigma_y[0] : 0.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < sigma_x.size(); ++i) {
    const double merged = i < sigma_stack.size() ? sigma_stack[i] : 0.0;
    const double gap = std::abs(sigma_x[i] - merged);
    report.per_index_gaps.push_back(gap);
    worst = std::max(worst, gap - report.spectral_norm_y);
  }
  report.max_violation = worst;
  return report;
}

bool is_semantic_field(const Matrix& members, Eigen::Index center_index,
                       double epsilon) {
  require_valid(members);
  if (!(epsilon > 0.0)) throw_usage("is_semantic_field: epsilon must be positive");
  if (center_index < 0 || center_index >= members.rows()) {
    throw_usage("is_semantic_field: center index " + std::to_string(center_index) +
                " out of range");
  }
  const Vector center = members.row(center_index).transpose();
  for (Eigen::Index r = 0; r < members.rows(); ++r) {
    const Vector row = members.row(r).transpose();
    if (!(row.norm() > 0.0)) {
      throw_numeric("is_semantic_field: row " + std::to_string(r) + " has zero norm");
    }
    if (!(semantic_distance(row, center) < epsilon)) return false;
  }
  return true;
}

}  // namespace safari
