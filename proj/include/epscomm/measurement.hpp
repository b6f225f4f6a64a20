#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "epscomm/core.hpp"
#include "epscomm/random.hpp"

namespace epscomm {

/// POVM with a fixed outcome count: operators are dim x dim, positive
/// semidefinite, and sum to the identity. Validation is explicit (see
/// validate_povm) so partially built families can exist during construction.
struct PovmFamily {
  Index dim = 0;
  std::vector<Matrix> operators;

  Index outcomes() const { return static_cast<Index>(operators.size()); }
};

struct PovmDiagnostics {
  bool pass = false;
  double tol = 0;
  double max_hermiticity_defect = 0;
  double min_eigenvalue = 0;  // most negative eigenvalue across all operators
  double sum_defect = 0;      // op norm distance of the operator sum from identity
  std::vector<double> operator_min_eigenvalues;
};

inline PovmDiagnostics validate_povm(const PovmFamily& f, Tolerance tol = 1e-10) {
  PovmDiagnostics diag;
  diag.tol = tol.value;
  if (f.outcomes() < 1) throw InvalidOutcomeCount("validate_povm: family has no operators");
  if (f.dim < 1) throw InvalidSize("validate_povm: dim must be positive");
  Matrix sum = Matrix::Zero(f.dim, f.dim);
  for (const Matrix& op : f.operators) {
    require_square(op, "validate_povm");
    if (op.rows() != f.dim)
      throw DimensionMismatch("validate_povm: operator dim " + std::to_string(op.rows()) +
                              " vs family dim " + std::to_string(f.dim));
    if (!all_finite(op)) throw NotPovm("validate_povm: operator has non-finite entries");
    diag.max_hermiticity_defect = std::max(diag.max_hermiticity_defect, hermiticity_defect(op));
    EigResult eig = detail::hermitian_eig_unchecked(op);
    diag.operator_min_eigenvalues.push_back(eig.eigenvalues(f.dim - 1));
    sum += op;
  }
  diag.min_eigenvalue = *std::min_element(diag.operator_min_eigenvalues.begin(),
                                          diag.operator_min_eigenvalues.end());
  diag.sum_defect = op_norm(sum - identity(f.dim));
  diag.pass = diag.max_hermiticity_defect <= tol.value && diag.min_eigenvalue >= -tol.value &&
              diag.sum_defect <= tol.value;
  return diag;
}

inline void require_povm(const PovmFamily& f, Tolerance tol = 1e-10) {
  PovmDiagnostics diag = validate_povm(f, tol);
  if (!diag.pass)
    throw NotPovm("family fails POVM check at tol " + std::to_string(tol.value) +
                  ": hermiticity defect " + std::to_string(diag.max_hermiticity_defect) +
                  ", min eigenvalue " + std::to_string(diag.min_eigenvalue) + ", sum defect " +
                  std::to_string(diag.sum_defect));
}

/// Largest distance of an operator from being idempotent, max_i ||P_i^2 - P_i||.
inline double projectivity_defect(const PovmFamily& f) {
  double worst = 0;
  for (const Matrix& op : f.operators) {
    require_square(op, "projectivity_defect");
    worst = std::max(worst, op_norm(op * op - op));
  }
  return worst;
}

/// POVM whose operators are orthogonal projections. Use as_projective to
/// promote a validated family.
struct ProjectivePovm : PovmFamily {};

inline ProjectivePovm as_projective(PovmFamily f, Tolerance tol = 1e-10) {
  require_povm(f, tol);
  const double idem = projectivity_defect(f);
  if (idem > tol.value)
    throw NotPovm("family is not projective: idempotency defect " + std::to_string(idem));
  ProjectivePovm p;
  p.dim = f.dim;
  p.operators = std::move(f.operators);
  return p;
}

/// Two-party measurement scenario: d POVM families per side, all on one
/// dim-dimensional space, all with m outcomes.
struct MeasurementSystem {
  Index dim = 0;
  Index m = 0;
  std::vector<PovmFamily> alice;
  std::vector<PovmFamily> bob;

  Index d() const { return static_cast<Index>(alice.size()); }
};

inline void validate_measurement_system(const MeasurementSystem& sys, Tolerance tol = 1e-10) {
  if (sys.alice.empty() || sys.alice.size() != sys.bob.size())
    throw InvalidSize("measurement system needs matching nonempty family lists, got " +
                      std::to_string(sys.alice.size()) + " and " + std::to_string(sys.bob.size()));
  for (const auto* side : {&sys.alice, &sys.bob})
    for (const PovmFamily& f : *side) {
      if (f.dim != sys.dim)
        throw DimensionMismatch("family dim " + std::to_string(f.dim) + " vs system dim " +
                                std::to_string(sys.dim));
      if (f.outcomes() != sys.m)
        throw InvalidOutcomeCount("family has " + std::to_string(f.outcomes()) +
                                  " outcomes, system declares " + std::to_string(sys.m));
      require_povm(f, tol);
    }
}

/// Symmetrized interaction product
///   A o B = (sqrt(A) B sqrt(A) + sqrt(B) A sqrt(B)) / 2.
/// Positive whenever A and B are, and coincides with the modulus-weighted
/// mean A B for commuting arguments.
inline Matrix star_product(const Matrix& a, const Matrix& b, Tolerance psd_tol = 1e-8) {
  require_square(a, "star_product");
  require_same_shape(a, b, "star_product");
  const Matrix ra = psd_sqrt(a, psd_tol);
  const Matrix rb = psd_sqrt(b, psd_tol);
  return hermitian_part((ra * b * ra + rb * a * rb) / 2.0);
}

/// Block matrix of compressed interaction products. Rows and columns are
/// indexed by (setting, outcome) pairs, row (k,i), column (l,j); each block is
/// the n x n compression of alice[k].operators[i] o bob[l].operators[j].
struct CorrelationMatrix {
  Index d = 0;
  Index m = 0;
  Index n = 0;
  std::vector<Matrix> blocks;  // (d*m)^2 blocks, row-major

  Index side() const { return d * m; }

  const Matrix& block(Index k, Index i, Index l, Index j) const {
    return blocks[static_cast<std::size_t>((k * m + i) * side() + (l * m + j))];
  }
  Matrix& block(Index k, Index i, Index l, Index j) {
    return blocks[static_cast<std::size_t>((k * m + i) * side() + (l * m + j))];
  }
};

inline CorrelationMatrix correlation_matrix(const MeasurementSystem& sys, const Isometry& v,
                                            Tolerance tol = 1e-8) {
  validate_measurement_system(sys, tol);
  if (v.target_dim() != sys.dim)
    throw DimensionMismatch("isometry target dim " + std::to_string(v.target_dim()) +
                            " vs system dim " + std::to_string(sys.dim));
  CorrelationMatrix corr;
  corr.d = sys.d();
  corr.m = sys.m;
  corr.n = v.source_dim();
  corr.blocks.resize(static_cast<std::size_t>(corr.side() * corr.side()));
  for (Index k = 0; k < corr.d; ++k)
    for (Index i = 0; i < corr.m; ++i)
      for (Index l = 0; l < corr.d; ++l)
        for (Index j = 0; j < corr.m; ++j)
          corr.block(k, i, l, j) =
              compress(star_product(sys.alice[k].operators[i], sys.bob[l].operators[j], tol), v);
  return corr;
}

/// Worst defect of the row sums: for each setting pair (k,l) the blocks over
/// outcome pairs must sum to the identity on the compressed space.
inline double correlation_sum_defect(const CorrelationMatrix& corr) {
  double worst = 0;
  for (Index k = 0; k < corr.d; ++k)
    for (Index l = 0; l < corr.d; ++l) {
      Matrix sum = Matrix::Zero(corr.n, corr.n);
      for (Index i = 0; i < corr.m; ++i)
        for (Index j = 0; j < corr.m; ++j) sum += corr.block(k, i, l, j);
      worst = std::max(worst, op_norm(sum - identity(corr.n)));
    }
  return worst;
}

/// Most negative eigenvalue over the hermitian parts of all blocks. For n = 1
/// this is just the smallest entry.
inline double correlation_min_eigenvalue(const CorrelationMatrix& corr) {
  double worst = 0;
  for (const Matrix& b : corr.blocks) {
    EigResult eig = detail::hermitian_eig_unchecked(b);
    worst = std::min(worst, eig.eigenvalues(corr.n - 1));
  }
  return worst;
}

/// Largest commutator norm between any Alice operator and any Bob operator.
inline double max_commutator(const MeasurementSystem& sys) {
  double worst = 0;
  for (const PovmFamily& fa : sys.alice)
    for (const PovmFamily& fb : sys.bob)
      for (const Matrix& a : fa.operators)
        for (const Matrix& b : fb.operators) worst = std::max(worst, commutator_norm(a, b));
  return worst;
}

/// Random POVM from normalized Wishart blocks: with R_i = G_i G_i* and
/// S = sum R_i, the operators S^{-1/2} R_i S^{-1/2} sum to the identity.
/// Redraws when S is numerically singular; gives up after eight attempts.
inline PovmFamily random_povm(Index dim, Index m, RandomSeed seed) {
  if (dim < 1) throw InvalidSize("random_povm: dim must be positive");
  if (m < 1) throw InvalidOutcomeCount("random_povm: need at least one outcome");
  Rng rng(seed);
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::vector<Matrix> wisharts;
    wisharts.reserve(static_cast<std::size_t>(m));
    Matrix s = Matrix::Zero(dim, dim);
    for (Index i = 0; i < m; ++i) {
      Matrix g = random_gaussian(dim, dim, rng);
      wisharts.push_back(hermitian_part(g * g.adjoint()));
      s += wisharts.back();
    }
    EigResult eig = detail::hermitian_eig_unchecked(s);
    if (eig.eigenvalues(dim - 1) <= 1e-8 * eig.eigenvalues(0)) continue;
    RealVector inv_roots(dim);
    for (Index k = 0; k < dim; ++k) inv_roots(k) = 1.0 / std::sqrt(eig.eigenvalues(k));
    const Matrix s_inv_root = eig.eigenvectors * inv_roots.asDiagonal() * eig.eigenvectors.adjoint();
    PovmFamily f;
    f.dim = dim;
    for (Index i = 0; i < m; ++i)
      f.operators.push_back(hermitian_part(s_inv_root * wisharts[static_cast<std::size_t>(i)] * s_inv_root));
    // Compensate the residual sum defect on the last operator so the family
    // validates at tight tolerances.
    Matrix total = Matrix::Zero(dim, dim);
    for (const Matrix& op : f.operators) total += op;
    f.operators.back() += identity(dim) - total;
    f.operators.back() = hermitian_part(f.operators.back());
    return f;
  }
  throw SingularSum("random_povm: Wishart sum numerically singular after 8 attempts");
}

/// Random projective POVM: a Haar unitary applied to a coordinate partition
/// of the space into m blocks (earlier outcomes get the larger blocks).
inline ProjectivePovm random_projective_povm(Index dim, Index m, RandomSeed seed) {
  if (dim < 1) throw InvalidSize("random_projective_povm: dim must be positive");
  if (m < 1 || m > dim)
    throw InvalidOutcomeCount("random_projective_povm: need 1 <= outcomes <= dim, got " +
                              std::to_string(m) + " on dim " + std::to_string(dim));
  Rng rng(seed);
  const Matrix u = haar_unitary(dim, rng);
  ProjectivePovm f;
  f.dim = dim;
  Index offset = 0;
  for (Index i = 0; i < m; ++i) {
    const Index block = dim / m + (i < dim % m ? 1 : 0);
    const Matrix cols = u.middleCols(offset, block);
    f.operators.push_back(hermitian_part(cols * cols.adjoint()));
    offset += block;
  }
  return f;
}

/// Clock and shift pair on C^n: U = diag(1, w, ..., w^{n-1}) with
/// w = exp(2 pi i / n), V the cyclic coordinate shift. Both are unitary and
/// ||[U, V]|| = |w - 1| = 2 sin(pi / n).
inline std::pair<Matrix, Matrix> voiculescu_pair(Index n) {
  if (n < 2) throw InvalidSize("voiculescu_pair: need n >= 2");
  Matrix u = Matrix::Zero(n, n);
  Matrix v = Matrix::Zero(n, n);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (Index k = 0; k < n; ++k) {
    u(k, k) = std::polar(1.0, step * static_cast<double>(k));
    v((k + 1) % n, k) = 1.0;
  }
  return {u, v};
}

struct RoundingResult {
  ProjectivePovm povm;
  std::vector<double> deviations;  // ||P_i - A_i|| per outcome
  double input_delta = 0;          // measured distance of the input from projective
  double constant_estimate = 0;    // max deviation / input_delta
};

/// Rounds a nearly projective family to an exactly projective one by
/// sequential spectral rounding on the orthogonal complement of what has
/// already been assigned; the last operator takes the remainder.
inline RoundingResult round_to_projective_povm(const PovmFamily& f, Tolerance herm_tol = 1e-8) {
  const Index m = f.outcomes();
  const Index dim = f.dim;
  if (m < 1) throw InvalidOutcomeCount("round_to_projective_povm: family has no operators");
  RoundingResult result;
  double delta = 0;
  Matrix sum = Matrix::Zero(dim, dim);
  for (const Matrix& op : f.operators) {
    require_square(op, "round_to_projective_povm");
    if (op.rows() != dim) throw DimensionMismatch("round_to_projective_povm: operator dim mismatch");
    if (hermiticity_defect(op) > herm_tol.value)
      throw NotHermitian("round_to_projective_povm: operator not hermitian within tolerance");
    EigResult eig = detail::hermitian_eig_unchecked(op);
    for (Index k = 0; k < dim; ++k) {
      const double lam = eig.eigenvalues(k);
      delta = std::max(delta, std::min(std::abs(lam), std::abs(1.0 - lam)));
    }
    sum += op;
  }
  delta = std::max(delta, op_norm(sum - identity(dim)));
  result.input_delta = delta;
  if (delta >= 0.1)
    throw NotNearProjective("round_to_projective_povm: input is " + std::to_string(delta) +
                            " away from projective, limit is 0.1");

  ProjectivePovm rounded;
  rounded.dim = dim;
  Matrix assigned = Matrix::Zero(dim, dim);
  for (Index i = 0; i + 1 < m; ++i) {
    const Matrix free = identity(dim) - assigned;
    Matrix p;
    try {
      p = round_to_projection(hermitian_part(free * f.operators[static_cast<std::size_t>(i)] * free));
    } catch (const SpectralGapTooSmall& e) {
      throw RoundingFailed(std::string("round_to_projective_povm: outcome ") + std::to_string(i) +
                           " has no spectral gap to round across (" + e.what() + ")");
    }
    rounded.operators.push_back(p);
    assigned += p;
  }
  Matrix last = hermitian_part(identity(dim) - assigned);
  const double last_defect = op_norm(last * last - last);
  if (last_defect > 1e-8)
    throw RoundingFailed("round_to_projective_povm: remainder is not a projection, defect " +
                         std::to_string(last_defect));
  rounded.operators.push_back(last);

  for (Index i = 0; i < m; ++i)
    result.deviations.push_back(
        op_norm(rounded.operators[static_cast<std::size_t>(i)] - f.operators[static_cast<std::size_t>(i)]));
  result.constant_estimate =
      (delta > 0) ? *std::max_element(result.deviations.begin(), result.deviations.end()) / delta : 0.0;
  result.povm = std::move(rounded);
  return result;
}

}  // namespace epscomm
