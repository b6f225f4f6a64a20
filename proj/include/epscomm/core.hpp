#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "epscomm/errors.hpp"
#include "epscomm/matrix.hpp"

namespace epscomm {

/// Spectral decomposition of a Hermitian matrix. Eigenvalues are sorted in
/// descending order; column k of eigenvectors pairs with eigenvalues[k].
struct EigResult {
  RealVector eigenvalues;
  Matrix eigenvectors;
};

namespace detail {

// Symmetrizes and diagonalizes without the hermiticity guard. Every spectral
// routine below funnels through here so they share one backend.
inline EigResult hermitian_eig_unchecked(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success)
    throw Error("eigensolver failed to converge on a " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()) + " matrix");
  const Index n = m.rows();
  EigResult out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = Matrix(n, n);
  for (Index k = 0; k < n; ++k) out.eigenvectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  return out;
}

inline double top_eigenvalue(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian);
  if (solver.info() != Eigen::Success) throw Error("eigensolver failed to converge");
  return solver.eigenvalues()(hermitian.rows() - 1);
}

}  // namespace detail

/// Operator norm (largest singular value), computed as the square root of the
/// top eigenvalue of M* M. Accepts rectangular input.
inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = hermitian_part(m.adjoint() * m);
  const double top = detail::top_eigenvalue(gram);
  return std::sqrt(std::max(top, 0.0));
}

inline double hermiticity_defect(const Matrix& m) {
  require_square(m, "hermiticity_defect");
  return op_norm(m - m.adjoint());
}

inline double unitarity_defect(const Matrix& u) {
  require_square(u, "unitarity_defect");
  return op_norm(u.adjoint() * u - identity(u.cols()));
}

/// Full spectral decomposition. Rejects input that is not Hermitian within
/// hermiticity_tol in operator norm.
inline EigResult hermitian_eig(const Matrix& m, Tolerance hermiticity_tol = 1e-10) {
  require_square(m, "hermitian_eig");
  const double defect = hermiticity_defect(m);
  if (defect > hermiticity_tol.value)
    throw NotHermitian("hermitian_eig: hermiticity defect " + std::to_string(defect) +
                       " exceeds tolerance " + std::to_string(hermiticity_tol.value));
  return detail::hermitian_eig_unchecked(m);
}

/// Norm of the commutator [A,B] = AB - BA.
inline double commutator_norm(const Matrix& a, const Matrix& b) {
  require_square(a, "commutator_norm");
  require_square(b, "commutator_norm");
  require_same_shape(a, b, "commutator_norm");
  return op_norm(a * b - b * a);
}

/// Positive semidefinite square root. Eigenvalues in [-psd_tol, 0) are
/// treated as roundoff and clamped to zero; anything below -psd_tol is a
/// genuine violation and raises NotPsd.
inline Matrix psd_sqrt(const Matrix& m, Tolerance psd_tol = 1e-8) {
  EigResult eig = hermitian_eig(m);
  const Index n = m.rows();
  const double min_eig = (n > 0) ? eig.eigenvalues(n - 1) : 0.0;
  if (min_eig < -psd_tol.value)
    throw NotPsd("psd_sqrt: min eigenvalue " + std::to_string(min_eig) + " below -" +
                 std::to_string(psd_tol.value));
  RealVector roots(n);
  for (Index k = 0; k < n; ++k) roots(k) = std::sqrt(std::max(eig.eigenvalues(k), 0.0));
  return eig.eigenvectors * roots.asDiagonal() * eig.eigenvectors.adjoint();
}

/// Spectral projection of a Hermitian matrix onto the eigenspaces with
/// eigenvalue above 1/2. Refuses to round when some eigenvalue sits inside
/// the window [1/2 - gap_window, 1/2 + gap_window]: the rounding direction
/// would be numerically meaningless there.
inline Matrix round_to_projection(const Matrix& m, double gap_window = 1e-8) {
  EigResult eig = hermitian_eig(m);
  const Index n = m.rows();
  Matrix p = Matrix::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    const double lam = eig.eigenvalues(k);
    if (std::abs(lam - 0.5) <= gap_window)
      throw SpectralGapTooSmall("round_to_projection: eigenvalue " + std::to_string(lam) +
                                " within " + std::to_string(gap_window) + " of 1/2");
    if (lam > 0.5) p += eig.eigenvectors.col(k) * eig.eigenvectors.col(k).adjoint();
  }
  return hermitian_part(p);
}

/// Unitary polar factor: for M = W S Z* (SVD), returns W Z*. For invertible M
/// this is M (M* M)^{-1/2}; for singular M it is still a valid unitary.
inline Matrix polar_unitary(const Matrix& m) {
  require_square(m, "polar_unitary");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// Column-isometry V: target_dim x source_dim with V* V = identity. Validated
/// on construction so downstream code can compress without rechecking.
class Isometry {
 public:
  /// Empty isometry on the zero-dimensional space; placeholder for result
  /// structs that are filled in later.
  Isometry() : mat_(0, 0) {}

  explicit Isometry(Matrix m, Tolerance tol = 1e-12) : mat_(std::move(m)) {
    if (mat_.rows() < mat_.cols())
      throw NotIsometry("isometry must not shrink: " + std::to_string(mat_.rows()) + "x" +
                        std::to_string(mat_.cols()));
    const double defect = op_norm(Matrix(mat_.adjoint() * mat_) - identity(mat_.cols()));
    if (defect > tol.value)
      throw NotIsometry("V*V differs from identity by " + std::to_string(defect) +
                        " (tolerance " + std::to_string(tol.value) + ")");
  }

  const Matrix& matrix() const { return mat_; }
  Index source_dim() const { return mat_.cols(); }
  Index target_dim() const { return mat_.rows(); }

  /// Embedding of the source space onto coordinates [offset, offset+source).
  static Isometry coordinate_embedding(Index target, Index source, Index offset = 0) {
    if (source < 0 || target < source || offset < 0 || offset + source > target)
      throw NotIsometry("coordinate_embedding: invalid dims target=" + std::to_string(target) +
                        " source=" + std::to_string(source) + " offset=" + std::to_string(offset));
    Matrix m = Matrix::Zero(target, source);
    m.block(offset, 0, source, source) = identity(source);
    return Isometry(std::move(m));
  }

 private:
  Matrix mat_;
};

/// Compression V* M V of an operator on the target space back to the source.
inline Matrix compress(const Matrix& m, const Isometry& v) {
  require_square(m, "compress");
  if (m.rows() != v.target_dim())
    throw DimensionMismatch("compress: operator dim " + std::to_string(m.rows()) +
                            " vs isometry target dim " + std::to_string(v.target_dim()));
  return v.matrix().adjoint() * m * v.matrix();
}

}  // namespace epscomm
