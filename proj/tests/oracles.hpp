#pragma once

// Independent numerical routes used to cross-check the library kernels.
// Deliberately hand-rolled: none of these call into epscomm/core.hpp's
// spectral code paths.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

namespace oracles {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Complex = std::complex<double>;

// xorshift-based deterministic start vector, independent of std:: distributions
inline Vector seeded_vector(Eigen::Index n, std::uint64_t seed) {
  Vector v(n);
  std::uint64_t s = seed * 2685821657736338717ull + 1442695040888963407ull;
  auto next = [&s]() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return static_cast<double>(s >> 11) / 9007199254740992.0 - 0.5;
  };
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(next(), next());
  return v;
}

/// Operator norm via power iteration on M* M with a Rayleigh quotient at the
/// end. Independent of any eigensolver.
inline double power_iteration_norm(const Matrix& m, int iters = 3000, std::uint64_t seed = 7) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.adjoint() * m;
  Vector v = seeded_vector(gram.rows(), seed);
  v.normalize();
  for (int it = 0; it < iters; ++it) {
    Vector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  const double rayleigh = (v.adjoint() * gram * v)(0, 0).real();
  return std::sqrt(std::max(rayleigh, 0.0));
}

/// Matrix square root by the Denman-Beavers iteration, which never touches an
/// eigendecomposition. Valid for positive definite input; for semidefinite
/// input regularize slightly before calling.
inline Matrix denman_beavers_sqrt(const Matrix& a, int iters = 64) {
  Matrix y = a;
  Matrix z = Matrix::Identity(a.rows(), a.cols());
  for (int it = 0; it < iters; ++it) {
    const Matrix yn = (y + z.inverse()) / 2.0;
    const Matrix zn = (z + y.inverse()) / 2.0;
    const double step = (yn - y).cwiseAbs().maxCoeff();
    y = yn;
    z = zn;
    if (step < 1e-15) break;
  }
  return y;
}

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

/// Optimal CHSH witnesses in closed form: A1 = X, A2 = Z on one qubit,
/// B1 = (X+Z)/sqrt(2), B2 = (X-Z)/sqrt(2) on the other. All four are
/// Hermitian unitaries and the Bell operator has norm exactly 2 sqrt(2).
struct ChshWitnesses {
  Matrix a1, a2, b1, b2;  // 4x4, acting on the two tensor legs
};

inline ChshWitnesses chsh_qubit_witnesses() {
  const Matrix x = pauli_x(), z = pauli_z();
  const Matrix id = Matrix::Identity(2, 2);
  auto kron2 = [](const Matrix& a, const Matrix& b) {
    Matrix out(4, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out.block(2 * i, 2 * j, 2, 2) = a(i, j) * b;
    return out;
  };
  ChshWitnesses w;
  w.a1 = kron2(x, id);
  w.a2 = kron2(z, id);
  w.b1 = kron2(id, (x + z) / std::sqrt(2.0));
  w.b2 = kron2(id, (x - z) / std::sqrt(2.0));
  return w;
}

inline double tsirelson_bound() { return 2.0 * std::sqrt(2.0); }

/// Commutator norm of the clock and shift pair on C^n in closed form:
/// the commutator is w^k(w - 1) on shifted coordinates, norm |w - 1|.
inline double clock_shift_commutator(Eigen::Index n) {
  return 2.0 * std::sin(std::numbers::pi / static_cast<double>(n));
}

}  // namespace oracles
