#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>

#include "epscomm/errors.hpp"

namespace epscomm {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Nonnegative tolerance used by validation routines. Converts implicitly
/// from double so call sites can pass a literal.
struct Tolerance {
  double value = 1e-10;

  Tolerance() = default;
  Tolerance(double v) : value(v) {
    if (!(v >= 0.0)) throw InvalidSize("tolerance must be nonnegative, got " + std::to_string(v));
  }
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline Matrix identity(Index n) { return Matrix::Identity(n, n); }

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw NotSquare(std::string(what) + ": expected square matrix, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()) + " differ");
}

/// Hermitian part (M + M*)/2. Used to symmetrize before spectral calls.
inline Matrix hermitian_part(const Matrix& m) { return (m + m.adjoint()) / 2.0; }

/// Kronecker product, row-major block convention: (a o b)[(i,k),(j,l)] = a(i,j) b(k,l).
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace epscomm
