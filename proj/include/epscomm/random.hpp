#pragma once

#include <cstdint>
#include <random>

#include "epscomm/matrix.hpp"

namespace epscomm {

/// Seed wrapper so call sites cannot confuse seeds with dimensions.
struct RandomSeed {
  std::uint64_t value = 0;
};

/// splitmix64 step; used to derive decorrelated child seeds from one root
/// seed deterministically (stream index -> child seed).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline RandomSeed derive_seed(RandomSeed base, std::uint64_t stream) {
  return RandomSeed{splitmix64(base.value + 0x632be59bd9b4e019ull * (stream + 1))};
}

class Rng {
 public:
  explicit Rng(RandomSeed seed) : engine_(seed.value) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }

  /// Integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    std::uniform_int_distribution<int> dist(lo, hi);
    return dist(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Matrix with i.i.d. standard complex gaussian entries.
inline Matrix random_gaussian(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = Complex(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
  return m;
}

inline Matrix random_hermitian(Index n, Rng& rng) {
  Matrix g = random_gaussian(n, n, rng);
  return hermitian_part(g);
}

/// Haar-distributed unitary via QR of a gaussian matrix with the standard
/// phase fix (R diagonal made positive so the factorization is unique).
inline Matrix haar_unitary(Index n, Rng& rng) {
  Matrix g = random_gaussian(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < n; ++k) {
    Complex d = r(k, k);
    double a = std::abs(d);
    q.col(k) *= (a > 0) ? d / a : Complex(1.0, 0.0);
  }
  return q;
}

}  // namespace epscomm
