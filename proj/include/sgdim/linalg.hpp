/**
 * @file linalg.hpp
 * @brief Dense kernel: rank decisions, orthonormal bases, projectors and the
 * symmetric inverse square root used by the scaling code.
 *
 * Every decision that is exact in theory (rank, membership, equality of
 * spaces) is made against a Tolerance. Matrices are Eigen row-major so the
 * rows of a basis matrix are the basis vectors.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "sgdim/error.hpp"

namespace sgdim {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Tolerance {
  /// Singular values below rank_tol * sigma_max count as zero.
  double rank_tol = 1e-9;
  /// Threshold for membership, annihilation and orthonormality residuals.
  double residual_tol = 1e-8;

  void validate() const {
    if (!(rank_tol > 0.0) || !(rank_tol < 1.0) || !(residual_tol > 0.0)) {
      throw PreconditionError("tolerance: need 0 < rank_tol < 1 and residual_tol > 0");
    }
  }
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvariantError(std::string(what) + ": non-finite entry");
}

/// Stack rows of a on top of rows of b. Column counts must agree.
inline Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw PreconditionError("vstack: column mismatch");
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

inline Vector singular_values(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return Vector();
  // Jacobi throughout: Eigen 3.4.0's BDCSVD reads out of bounds in
  // perturbCol0 on inputs with many repeated rows.
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

/// Smallest singular value of a matrix with at most as many rows as columns.
/// Well separated cases are read off the Gram matrix; near-singular ones go
/// through an SVD, where the Gram route would square away the precision.
inline double smallest_singular_value(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  if (m.rows() == 1) return m.norm();
  const Matrix g = m * m.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  if (lo > 1e-12 * std::max(1.0, eig.eigenvalues()(g.rows() - 1))) return std::sqrt(lo);
  return singular_values(m).minCoeff();
}

inline double spectral_norm(const Matrix& m) {
  Vector s = singular_values(m);
  return s.size() == 0 ? 0.0 : s.maxCoeff();
}

inline std::size_t rank(const Matrix& m, const Tolerance& tol = {}) {
  Vector s = singular_values(m);
  if (s.size() == 0) return 0;
  const double top = s.maxCoeff();
  if (top <= 0.0) return 0;
  return static_cast<std::size_t>((s.array() >= tol.rank_tol * top).count());
}

namespace detail {

// Flip each row so its largest-magnitude entry is positive. Makes bases
// reproducible across runs regardless of SVD sign conventions.
inline void canonical_signs(Matrix& rows) {
  for (Index r = 0; r < rows.rows(); ++r) {
    Index arg = 0;
    rows.row(r).cwiseAbs().maxCoeff(&arg);
    if (rows(r, arg) < 0.0) rows.row(r) *= -1.0;
  }
}

}  // namespace detail

/// Orthonormal basis (as rows) of the row span of m. A zero input yields a
/// 0-row matrix, which stands for the zero space. Singular values are cut at
/// rank_tol times `reference` when it is positive (use it when m is the image
/// of unit vectors under a map of known norm), else at rank_tol * sigma_max.
inline Matrix orthonormalize(const Matrix& m, const Tolerance& tol = {}, double reference = 0.0) {
  const Index cols = m.cols();
  if (m.rows() == 0) return Matrix(0, cols);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinV);
  const Matrix& v = svd.matrixV();
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return Matrix(0, cols);
  const double cut = tol.rank_tol * (reference > 0.0 ? reference : s(0));
  Index r = 0;
  while (r < s.size() && s(r) >= cut) ++r;
  Matrix out = v.leftCols(r).transpose();
  detail::canonical_signs(out);
  return out;
}

/// max |U U^T - I|, the orthonormality defect of the rows of u.
inline double orthonormality_defect(const Matrix& u) {
  if (u.rows() == 0) return 0.0;
  Matrix g = u * u.transpose();
  g -= Matrix::Identity(u.rows(), u.rows());
  return g.cwiseAbs().maxCoeff();
}

inline Matrix projector(const Matrix& u, const Tolerance& tol = {}) {
  if (orthonormality_defect(u) > tol.residual_tol) {
    throw PreconditionError("projector: rows are not orthonormal");
  }
  return u.transpose() * u;
}

/// Frobenius norm of the part of the rows of b outside the row span of the
/// orthonormal rows s.
inline double residual_norm(const Matrix& b, const Matrix& s) {
  if (b.rows() == 0) return 0.0;
  if (s.rows() == 0) return b.norm();
  return (b - (b * s.transpose()) * s).norm();
}

/// Symmetric positive definite M with M^T M = X^{-1}, i.e. X^{-1/2}.
inline Matrix inv_sqrt_factor(const Matrix& x, const Tolerance& tol = {}) {
  if (x.rows() != x.cols()) throw PreconditionError("inv_sqrt_factor: matrix not square");
  if (x.rows() == 0) return Matrix(0, 0);
  require_finite(x, "inv_sqrt_factor");
  Matrix sym = 0.5 * (x + x.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw DegenerateStateError("inv_sqrt_factor: eigensolver failed");
  const Vector& lam = eig.eigenvalues();
  const double top = lam.maxCoeff();
  if (!(top > 0.0) || lam.minCoeff() <= tol.rank_tol * top) {
    throw DegenerateStateError("inv_sqrt_factor: matrix is not positive definite");
  }
  Vector scale = lam.array().rsqrt();
  const Matrix& q = eig.eigenvectors();
  return q * scale.asDiagonal() * q.transpose();
}

struct CauchyBinet {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// det(AB) against the sum over all l-subsets I of det(A_I) det(B_I).
inline CauchyBinet cauchy_binet_check(const Matrix& a, const Matrix& b) {
  const Index l = a.rows();
  const Index m = a.cols();
  if (b.rows() != m || b.cols() != l) throw PreconditionError("cauchy_binet_check: shape mismatch");
  if (m > 12) throw SizeLimitError("cauchy_binet_check: m > 12");
  CauchyBinet out;
  out.lhs = l == 0 ? 1.0 : (a * b).determinant();
  if (l > m) return out;
  std::vector<bool> pick(static_cast<std::size_t>(m), false);
  std::fill(pick.begin(), pick.begin() + l, true);
  Matrix ai(l, l), bi(l, l);
  do {
    Index c = 0;
    for (Index j = 0; j < m; ++j) {
      if (!pick[static_cast<std::size_t>(j)]) continue;
      ai.col(c) = a.col(j);
      bi.row(c) = b.row(j);
      ++c;
    }
    out.rhs += l == 0 ? 1.0 : ai.determinant() * bi.determinant();
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

}  // namespace sgdim
