#include "safari/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "safari/error.hpp"

namespace safari {

void require_valid(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw_usage("matrix must have at least one row and one column (got " +
                std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
  }
  if (!m.allFinite()) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (!m.row(r).allFinite()) {
        throw_numeric("matrix row " + std::to_string(r) +
                      " contains a non-finite value");
      }
    }
  }
}

double semantic_distance(VectorRef u, VectorRef v) {
  if (u.size() != v.size()) {
    throw_usage("semantic_distance: dimension mismatch (" +
                std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) {
    throw_numeric("semantic_distance: zero-norm vector");
  }
  const double d = 1.0 - u.dot(v) / (nu * nv);
  return std::clamp(d, 0.0, 2.0);
}

bool canonicalize_sign(Eigen::Ref<Eigen::RowVectorXd> row) {
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    const double mag = std::abs(row[j]);
    if (mag > best_mag) {
      best_mag = mag;
      best = j;
    }
  }
  if (row.size() > 0 && row[best] < 0.0) {
    row = -row;
    return true;
  }
  return false;
}

SvdResult svd(const Matrix& m, double tolerance, bool keep_left) {
  require_valid(m);
  if (!(tolerance > 0.0)) throw_usage("svd: tolerance must be positive");

  const Eigen::MatrixXd dense = m;
  const unsigned options =
      keep_left ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : Eigen::ComputeThinV;
  Eigen::BDCSVD<Eigen::MatrixXd> dec(dense, options);
  if (dec.info() != Eigen::Success) throw_numeric("svd: decomposition failed");

  const Vector& sigma = dec.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma[0] : 0.0;
  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma[rank] > 0.0 &&
         sigma[rank] >= tolerance * sigma_max) {
    ++rank;
  }

  SvdResult out;
  out.singular_values = sigma.head(rank);
  out.right_basis = dec.matrixV().leftCols(rank).transpose();
  Matrix left;
  if (keep_left) left = dec.matrixU().leftCols(rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    if (canonicalize_sign(out.right_basis.row(i)) && keep_left) {
      left.col(i) = -left.col(i);
    }
  }
  if (keep_left) out.left_factors = std::move(left);
  return out;
}

namespace {

// Largest eigenvalue of the symmetric 2x2 matrix [[a, b], [b, c]].
double top_eigenvalue_2x2(double a, double b, double c) {
  return 0.5 * (a + c) + std::hypot(0.5 * (a - c), b);
}

// Power iteration on A^T A (right = true) or A A^T (right = false).
double power_iteration(const Matrix& a, bool right) {
  Vector x = right ? Vector(a.colwise().sum().transpose())
                   : Vector(a.rowwise().sum());
  if (!(x.norm() > 0.0)) {
    Eigen::Index best = 0;
    if (right) {
      a.rowwise().squaredNorm().maxCoeff(&best);
      x = a.row(best).transpose();
    } else {
      a.colwise().squaredNorm().maxCoeff(&best);
      x = a.col(best);
    }
    if (!(x.norm() > 0.0)) return 0.0;
  }
  x.normalize();

  double sigma = 0.0;
  Vector y;
  for (int it = 0; it < kPowerIterationMaxIterations; ++it) {
    y = right ? Vector(a * x) : Vector(a.transpose() * x);
    const double next = y.norm();
    if (!(next > 0.0)) return 0.0;
    x = right ? Vector(a.transpose() * y) : Vector(a * y);
    const double xn = x.norm();
    if (!(xn > 0.0)) return next;
    x /= xn;
    const bool converged = std::abs(next - sigma) < kPowerIterationTolerance * next;
    sigma = next;
    if (converged) return sigma;
  }
  // A nearly repeated top singular value stalls the iteration; solve the
  // smaller Gram matrix directly instead.
  const Matrix gram = right ? Matrix(a.transpose() * a) : Matrix(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

}  // namespace

double spectral_norm(const Matrix& m) {
  require_valid(m);
  if (m.rows() == 1) return m.row(0).norm();
  if (m.cols() == 1) return m.col(0).norm();
  if (m.rows() == 2) {
    const double a = m.row(0).squaredNorm();
    const double c = m.row(1).squaredNorm();
    const double b = m.row(0).dot(m.row(1));
    return std::sqrt(std::max(0.0, top_eigenvalue_2x2(a, b, c)));
  }
  if (m.cols() == 2) {
    const double a = m.col(0).squaredNorm();
    const double c = m.col(1).squaredNorm();
    const double b = m.col(0).dot(m.col(1));
    return std::sqrt(std::max(0.0, top_eigenvalue_2x2(a, b, c)));
  }
  return power_iteration(m, m.cols() <= m.rows());
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) {
    throw_usage("stack_rows: column mismatch (" + std::to_string(top.cols()) +
                " vs " + std::to_string(bottom.cols()) + ")");
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace safari
