#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "epscomm/core.hpp"
#include "epscomm/measurement.hpp"

namespace epscomm {

/// Translation unitary on l2(Z_M x Z_M) tensor C^n, stored structurally: the
/// ambient spaces of the averaging dilation get too large to hold a dense
/// copy, and keeping the permutation explicit lets commutation be checked
/// exactly instead of numerically.
struct ShiftUnitary {
  Index torus = 0;      // side length M
  Index inner_dim = 0;  // fiber dimension n
  int step_p = 0;       // delta_(p,q) maps to delta_(p+step_p, q+step_q) mod M
  int step_q = 0;

  Index ambient_dim() const { return torus * torus * inner_dim; }

  /// Left action on a tall matrix with ambient_dim rows: a pure row
  /// permutation, block of size inner_dim at a time.
  Matrix apply(const Matrix& w) const {
    if (w.rows() != ambient_dim())
      throw DimensionMismatch("ShiftUnitary::apply: got " + std::to_string(w.rows()) +
                              " rows, ambient dim is " + std::to_string(ambient_dim()));
    const Index m_side = torus, n = inner_dim;
    Matrix out(w.rows(), w.cols());
    for (Index p = 0; p < m_side; ++p)
      for (Index q = 0; q < m_side; ++q) {
        const Index src_p = ((p - step_p) % m_side + m_side) % m_side;
        const Index src_q = ((q - step_q) % m_side + m_side) % m_side;
        out.middleRows((p * m_side + q) * n, n) = w.middleRows((src_p * m_side + src_q) * n, n);
      }
    return out;
  }

  Matrix to_matrix() const {
    if (ambient_dim() > 4096)
      throw InvalidSize("ShiftUnitary::to_matrix: refusing to materialize dim " +
                        std::to_string(ambient_dim()));
    return apply(identity(ambient_dim()));
  }
};

/// Two torus translations always commute; this checks the composed index maps
/// agree point by point, which is an exact statement about the permutations.
inline bool shifts_commute(const ShiftUnitary& a, const ShiftUnitary& b) {
  if (a.torus != b.torus || a.inner_dim != b.inner_dim) return false;
  const Index m_side = a.torus;
  auto wrap = [m_side](Index x) { return ((x % m_side) + m_side) % m_side; };
  for (Index p = 0; p < m_side; ++p)
    for (Index q = 0; q < m_side; ++q) {
      const Index ab_p = wrap(p + a.step_p + b.step_p), ab_q = wrap(q + a.step_q + b.step_q);
      const Index ba_p = wrap(p + b.step_p + a.step_p), ba_q = wrap(q + b.step_q + a.step_q);
      if (ab_p != ba_p || ab_q != ba_q) return false;
    }
  return true;
}

using DilatedOperator = std::variant<Matrix, ShiftUnitary>;

inline Index ambient_dim_of(const DilatedOperator& op) {
  if (const auto* m = std::get_if<Matrix>(&op)) return m->rows();
  return std::get<ShiftUnitary>(op).ambient_dim();
}

inline Matrix materialize(const DilatedOperator& op) {
  if (const auto* m = std::get_if<Matrix>(&op)) return *m;
  return std::get<ShiftUnitary>(op).to_matrix();
}

/// op * w without materializing op.
inline Matrix apply_left(const DilatedOperator& op, const Matrix& w) {
  if (const auto* m = std::get_if<Matrix>(&op)) return *m * w;
  return std::get<ShiftUnitary>(op).apply(w);
}

struct DilationResult {
  Index ambient_dim = 0;
  Isometry isometry;  // ambient_dim x original_dim
  std::vector<DilatedOperator> dilated_alice;
  std::vector<DilatedOperator> dilated_bob;
  std::vector<double> defect_alice;  // ||V* P_i V - A_i|| per operator
  std::vector<double> defect_bob;
  double dilated_commutator = 0;  // max commutator norm on the ambient space
};

namespace detail {

inline double compression_defect(const DilatedOperator& op, const Isometry& v,
                                 const Matrix& original) {
  const Matrix compressed = v.matrix().adjoint() * apply_left(op, v.matrix());
  return op_norm(compressed - original);
}

}  // namespace detail

/// Block unitary of the square-root row of a POVM. With
/// X = [A_1^{1/2} ... A_m^{1/2}] (a coisometry since the A_i sum to 1),
///
///   U = [ X            0   ]
///       [ (1-X*X)^{1/2} -X* ]
///
/// is unitary on H^{m+1}; its first block row reproduces the square roots.
/// X*X is a projection (its square is X*(XX*)X = X*X), so the complement
/// 1 - X*X is its own square root; taking it directly instead of calling a
/// spectral sqrt keeps the unitarity error linear in the input's sum defect
/// rather than proportional to its square root.
inline Matrix naimark_block_unitary(const PovmFamily& f, Tolerance povm_tol = 1e-8) {
  require_povm(f, povm_tol);
  const Index n = f.dim, m = f.outcomes();
  Matrix x(n, m * n);
  for (Index i = 0; i < m; ++i)
    x.middleCols(i * n, n) = psd_sqrt(f.operators[static_cast<std::size_t>(i)]);
  const Matrix s = identity(m * n) - hermitian_part(x.adjoint() * x);
  Matrix u = Matrix::Zero((m + 1) * n, (m + 1) * n);
  u.topLeftCorner(n, m * n) = x;
  u.bottomLeftCorner(m * n, m * n) = s;
  u.bottomRightCorner(m * n, n) = -x.adjoint();
  return u;
}

/// Projective dilation of one POVM to H^{m+1}: conjugates the coordinate
/// projections by the block unitary, merging the last two coordinates into
/// outcome m so the family keeps m members. Compressing to the first
/// coordinate recovers the A_i.
inline std::vector<Matrix> naimark_family_projections(const PovmFamily& f,
                                                      Tolerance povm_tol = 1e-8) {
  const Matrix u = naimark_block_unitary(f, povm_tol);
  const Index n = f.dim, m = f.outcomes();
  std::vector<Matrix> projections;
  projections.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i + 1 < m; ++i) {
    const Matrix cols = u.middleCols(i * n, n);
    projections.push_back(hermitian_part(cols * cols.adjoint()));
  }
  const Matrix cols = u.middleCols((m - 1) * n, 2 * n);
  projections.push_back(hermitian_part(cols * cols.adjoint()));
  return projections;
}

namespace detail {

// Embeds an operator on C^blocks tensor C^n into
// C^blocks tensor C^blocks tensor C^n, acting on leg 1 or leg 2 (and the
// fiber). Index convention: (a, b, h) -> (a * blocks + b) * n + h.
inline Matrix place_with_fiber(const Matrix& op, Index blocks, Index n, int leg) {
  Matrix out = Matrix::Zero(blocks * blocks * n, blocks * blocks * n);
  for (Index a = 0; a < blocks; ++a)
    for (Index a2 = 0; a2 < blocks; ++a2)
      for (Index spectator = 0; spectator < blocks; ++spectator) {
        const Index row = (leg == 1) ? a * blocks + spectator : spectator * blocks + a;
        const Index col = (leg == 1) ? a2 * blocks + spectator : spectator * blocks + a2;
        out.block(row * n, col * n, n, n) = op.block(a * n, a2 * n, n, n);
      }
  return out;
}

}  // namespace detail

/// Joint projective dilation of a POVM pair. Each family is dilated on its
/// own copy of C^{m+1}, the copies are placed on separate tensor legs of
/// C^{m+1} tensor C^{m+1} tensor H, and the compression back to
/// delta_1 tensor delta_1 tensor H reproduces A_i, B_j, and the products
/// A_i B_j. The dilated families are exactly projective; their commutators
/// are whatever they are, and get measured into dilated_commutator.
inline DilationResult naimark_projective_dilation(const PovmFamily& alice, const PovmFamily& bob,
                                                  Tolerance povm_tol = 1e-8) {
  if (alice.dim != bob.dim)
    throw DimensionMismatch("naimark_projective_dilation: dims " + std::to_string(alice.dim) +
                            " vs " + std::to_string(bob.dim));
  if (alice.outcomes() != bob.outcomes())
    throw InvalidOutcomeCount("naimark_projective_dilation: outcome counts " +
                              std::to_string(alice.outcomes()) + " vs " +
                              std::to_string(bob.outcomes()));
  const Index n = alice.dim, m = alice.outcomes();
  const Index blocks = m + 1;
  const Index ambient = blocks * blocks * n;

  const std::vector<Matrix> pa = naimark_family_projections(alice, povm_tol);
  const std::vector<Matrix> pb = naimark_family_projections(bob, povm_tol);

  DilationResult result;
  result.ambient_dim = ambient;
  result.isometry = Isometry::coordinate_embedding(ambient, n, 0);
  for (const Matrix& p : pa) result.dilated_alice.emplace_back(detail::place_with_fiber(p, blocks, n, 1));
  for (const Matrix& q : pb) result.dilated_bob.emplace_back(detail::place_with_fiber(q, blocks, n, 2));

  for (Index i = 0; i < m; ++i) {
    result.defect_alice.push_back(detail::compression_defect(
        result.dilated_alice[static_cast<std::size_t>(i)], result.isometry,
        alice.operators[static_cast<std::size_t>(i)]));
    result.defect_bob.push_back(detail::compression_defect(
        result.dilated_bob[static_cast<std::size_t>(i)], result.isometry,
        bob.operators[static_cast<std::size_t>(i)]));
  }
  double worst = 0;
  for (const DilatedOperator& p : result.dilated_alice)
    for (const DilatedOperator& q : result.dilated_bob)
      worst = std::max(worst, commutator_norm(std::get<Matrix>(p), std::get<Matrix>(q)));
  result.dilated_commutator = worst;
  return result;
}

struct FolnerParams {
  Index m = 0;        // averaging window is {0,...,m}^2
  Index torus = 0;    // 0 means smallest legal value m + 2
  double epsilon = 0; // commutator budget the inputs must satisfy

  /// Window size from the budget: floor(1/sqrt(eps)), clamped to [1, 64].
  /// An exactly commuting pair (eps = 0) has no finite default; pick m
  /// explicitly in that case.
  static FolnerParams for_epsilon(double eps) {
    if (!(eps > 0))
      throw InvalidSize("FolnerParams::for_epsilon: budget must be positive; choose m directly "
                        "for exactly commuting inputs");
    FolnerParams p;
    p.epsilon = eps;
    const double raw = std::floor(1.0 / std::sqrt(eps));
    p.m = static_cast<Index>(std::clamp(raw, 1.0, 64.0));
    return p;
  }
};

/// Defect guarantee of the averaging dilation with window size m.
inline double folner_defect_bound(Index m, double eps) {
  return static_cast<double>(m) * eps + 1.0 / static_cast<double>(m + 1);
}

namespace detail {

// One Newton step Y -> (Y + Y^{-*})/2 pulls a near-unitary matrix onto the
// unitary group quadratically; two steps flatten any drift accumulated by
// repeated multiplication.
inline Matrix reunitarize(const Matrix& m) {
  Matrix y = m;
  for (int it = 0; it < 2; ++it) y = (y + y.inverse().adjoint()) / 2.0;
  return y;
}

}  // namespace detail

/// Averaging dilation of an eps-commuting unitary pair over a finite window
/// of the translation group. The isometry
///
///   W xi = (m+1)^{-1} sum_{(p,q) in F} delta_(p,q) tensor U^p V^q xi,
///   F = {0,...,m}^2,
///
/// maps into l2(torus) tensor C^n, and the two torus translations u, v (by
/// (-1,0) and (0,-1)) commute exactly while compressing close to U and V:
/// each defect is at most m * eps + 1/(m+1). A torus of side >= m + 2 leaves
/// the shifted windows unwrapped, so compressions match the group average
/// over Z^2 entry for entry. Only single pairs are supported; families with
/// d > 1 have no averaging trick of this kind.
inline DilationResult folner_dilation(const std::vector<Matrix>& u_fam,
                                      const std::vector<Matrix>& v_fam, FolnerParams params) {
  if (u_fam.size() != 1 || v_fam.size() != 1)
    throw UnsupportedFamilySize("folner_dilation: supports exactly one unitary per side, got " +
                                std::to_string(u_fam.size()) + " and " +
                                std::to_string(v_fam.size()));
  const Matrix& u = u_fam[0];
  const Matrix& v = v_fam[0];
  require_square(u, "folner_dilation");
  require_same_shape(u, v, "folner_dilation");
  const Index n = u.rows();
  for (const Matrix* w : {&u, &v}) {
    const double defect = unitarity_defect(*w);
    if (defect > 1e-10)
      throw NotUnitary("folner_dilation: input has unitarity defect " + std::to_string(defect));
  }
  const double measured = commutator_norm(u, v);
  if (measured > params.epsilon)
    throw CommutatorBudgetExceeded("folner_dilation: measured commutator " +
                                   std::to_string(measured) + " exceeds budget " +
                                   std::to_string(params.epsilon));
  if (params.m < 1) throw InvalidSize("folner_dilation: window size m must be >= 1");
  const Index m = params.m;
  const Index torus = (params.torus == 0) ? m + 2 : params.torus;
  if (torus < m + 2)
    throw BadTorus("folner_dilation: torus side " + std::to_string(torus) +
                   " would wrap the window, need >= " + std::to_string(m + 2));

  // powers of u and v, drift-corrected
  std::vector<Matrix> u_pow(static_cast<std::size_t>(m) + 1), v_pow(static_cast<std::size_t>(m) + 1);
  u_pow[0] = identity(n);
  v_pow[0] = identity(n);
  for (Index p = 1; p <= m; ++p) {
    u_pow[static_cast<std::size_t>(p)] = detail::reunitarize(u_pow[static_cast<std::size_t>(p - 1)] * u);
    v_pow[static_cast<std::size_t>(p)] = detail::reunitarize(v_pow[static_cast<std::size_t>(p - 1)] * v);
  }

  const Index ambient = torus * torus * n;
  Matrix w = Matrix::Zero(ambient, n);
  const double scale = 1.0 / static_cast<double>(m + 1);
  for (Index p = 0; p <= m; ++p)
    for (Index q = 0; q <= m; ++q)
      w.middleRows((p * torus + q) * n, n) =
          scale * (u_pow[static_cast<std::size_t>(p)] * v_pow[static_cast<std::size_t>(q)]);

  DilationResult result;
  result.ambient_dim = ambient;
  result.isometry = Isometry(std::move(w));
  result.dilated_alice.emplace_back(ShiftUnitary{torus, n, -1, 0});
  result.dilated_bob.emplace_back(ShiftUnitary{torus, n, 0, -1});
  result.defect_alice.push_back(
      detail::compression_defect(result.dilated_alice[0], result.isometry, u));
  result.defect_bob.push_back(
      detail::compression_defect(result.dilated_bob[0], result.isometry, v));
  if (!shifts_commute(std::get<ShiftUnitary>(result.dilated_alice[0]),
                      std::get<ShiftUnitary>(result.dilated_bob[0])))
    throw Error("folner_dilation: torus translations failed to commute; this cannot happen");
  result.dilated_commutator = 0.0;
  return result;
}

inline DilationResult folner_dilation(const Matrix& u, const Matrix& v, FolnerParams params) {
  return folner_dilation(std::vector<Matrix>{u}, std::vector<Matrix>{v}, params);
}

/// Unitary dilation of a contraction pair with an exact product compression.
/// Both outputs act on H^4. U_x is two diagonal copies of the defect-block
/// unitary
///
///   R_x = [ x            (1-xx*)^{1/2} ]
///         [ (1-x*x)^{1/2} -x*          ]
///
/// on legs (1,2) and (3,4); V_y is R_y threaded through legs (1,3) and (2,4).
/// The interleaving makes the (1,1) corner of U_x V_y equal to x y on the
/// nose: the only path from leg 1 back to leg 1 goes through the two
/// contraction corners.
inline std::pair<Matrix, Matrix> contraction_dilation_pair(const Matrix& x, const Matrix& y) {
  require_square(x, "contraction_dilation_pair");
  require_same_shape(x, y, "contraction_dilation_pair");
  for (const Matrix* c : {&x, &y}) {
    const double norm = op_norm(*c);
    if (norm > 1.0 + 1e-10)
      throw NotContraction("contraction_dilation_pair: op norm " + std::to_string(norm) +
                           " exceeds 1");
  }
  const Index n = x.rows();
  // Both defect halves from one SVD c = W S Z*: row defect (1 - c c*)^{1/2}
  // = W (1 - S^2)^{1/2} W*, column defect (1 - c* c)^{1/2} = Z (1 - S^2)^{1/2} Z*.
  // Sharing the singular values keeps c . col_defect = row_defect . c at
  // machine precision even when singular values sit exactly at 1; two
  // independent spectral square roots lose half the digits there.
  auto defect_halves = [](const Matrix& c) {
    Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RealVector r =
        (1.0 - svd.singularValues().array().square()).max(0.0).sqrt().matrix();
    const Matrix row = svd.matrixU() * r.asDiagonal() * svd.matrixU().adjoint();
    const Matrix col = svd.matrixV() * r.asDiagonal() * svd.matrixV().adjoint();
    return std::pair<Matrix, Matrix>{row, col};
  };

  Matrix ux = Matrix::Zero(4 * n, 4 * n);
  const auto [dxr, dxc] = defect_halves(x);
  for (Index copy = 0; copy < 2; ++copy) {
    const Index o = 2 * copy * n;
    ux.block(o, o, n, n) = x;
    ux.block(o, o + n, n, n) = dxr;
    ux.block(o + n, o, n, n) = dxc;
    ux.block(o + n, o + n, n, n) = -x.adjoint();
  }

  Matrix vy = Matrix::Zero(4 * n, 4 * n);
  const auto [dyr, dyc] = defect_halves(y);
  for (Index pair = 0; pair < 2; ++pair) {
    const Index lo = pair * n, hi = (pair + 2) * n;
    vy.block(lo, lo, n, n) = y;
    vy.block(lo, hi, n, n) = dyr;
    vy.block(hi, lo, n, n) = dyc;
    vy.block(hi, hi, n, n) = -y.adjoint();
  }
  return {ux, vy};
}

/// DilationResult wrapper around contraction_dilation_pair, compressing to
/// the first leg.
inline DilationResult contraction_dilation(const Matrix& x, const Matrix& y) {
  auto [ux, vy] = contraction_dilation_pair(x, y);
  const Index n = x.rows();
  DilationResult result;
  result.ambient_dim = 4 * n;
  result.isometry = Isometry::coordinate_embedding(4 * n, n, 0);
  result.dilated_alice.emplace_back(std::move(ux));
  result.dilated_bob.emplace_back(std::move(vy));
  result.defect_alice.push_back(
      detail::compression_defect(result.dilated_alice[0], result.isometry, x));
  result.defect_bob.push_back(
      detail::compression_defect(result.dilated_bob[0], result.isometry, y));
  result.dilated_commutator = commutator_norm(std::get<Matrix>(result.dilated_alice[0]),
                                              std::get<Matrix>(result.dilated_bob[0]));
  return result;
}

struct DilationReport {
  std::vector<double> defect_alice;
  std::vector<double> defect_bob;
  double dilated_commutator = 0;
  std::optional<double> product_residual;  // max ||V*(P_i Q_j)V - A_i B_j||, dense results only
  double max_discrepancy = 0;              // worst |stored - recomputed|
  bool consistent = false;
};

/// Recomputes every stored figure of a DilationResult from scratch against
/// the original operator families and checks the stored values match within
/// consistency_tol. Throws InconsistentResult when they do not.
inline DilationReport dilation_report(const DilationResult& r,
                                      const std::vector<Matrix>& original_alice,
                                      const std::vector<Matrix>& original_bob,
                                      Tolerance consistency_tol = 1e-10) {
  if (original_alice.size() != r.dilated_alice.size() ||
      original_bob.size() != r.dilated_bob.size())
    throw DimensionMismatch("dilation_report: family sizes do not match the result");
  DilationReport report;
  double disc = 0;
  for (std::size_t i = 0; i < r.dilated_alice.size(); ++i) {
    report.defect_alice.push_back(
        detail::compression_defect(r.dilated_alice[i], r.isometry, original_alice[i]));
    disc = std::max(disc, std::abs(report.defect_alice[i] - r.defect_alice[i]));
  }
  for (std::size_t j = 0; j < r.dilated_bob.size(); ++j) {
    report.defect_bob.push_back(
        detail::compression_defect(r.dilated_bob[j], r.isometry, original_bob[j]));
    disc = std::max(disc, std::abs(report.defect_bob[j] - r.defect_bob[j]));
  }

  const bool all_shifts = std::all_of(r.dilated_alice.begin(), r.dilated_alice.end(),
                                      [](const DilatedOperator& op) {
                                        return std::holds_alternative<ShiftUnitary>(op);
                                      }) &&
                          std::all_of(r.dilated_bob.begin(), r.dilated_bob.end(),
                                      [](const DilatedOperator& op) {
                                        return std::holds_alternative<ShiftUnitary>(op);
                                      });
  double worst_comm = 0;
  if (all_shifts) {
    for (const DilatedOperator& p : r.dilated_alice)
      for (const DilatedOperator& q : r.dilated_bob)
        if (!shifts_commute(std::get<ShiftUnitary>(p), std::get<ShiftUnitary>(q)))
          throw InconsistentResult("dilation_report: stored translations do not commute");
  } else {
    double residual = 0;
    for (std::size_t i = 0; i < r.dilated_alice.size(); ++i)
      for (std::size_t j = 0; j < r.dilated_bob.size(); ++j) {
        const Matrix p = materialize(r.dilated_alice[i]);
        const Matrix q = materialize(r.dilated_bob[j]);
        worst_comm = std::max(worst_comm, commutator_norm(p, q));
        const Matrix compressed_product = compress(p * q, r.isometry);
        residual = std::max(residual, op_norm(compressed_product -
                                              original_alice[i] * original_bob[j]));
      }
    report.product_residual = residual;
  }
  report.dilated_commutator = worst_comm;
  disc = std::max(disc, std::abs(worst_comm - r.dilated_commutator));
  report.max_discrepancy = disc;
  report.consistent = disc <= consistency_tol.value;
  if (!report.consistent)
    throw InconsistentResult("dilation_report: stored and recomputed figures differ by " +
                             std::to_string(disc));
  return report;
}

}  // namespace epscomm
