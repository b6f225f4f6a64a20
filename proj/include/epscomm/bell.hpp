#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epscomm/core.hpp"
#include "epscomm/random.hpp"

namespace epscomm {

/// Bell-type coefficient data: a d x d array of n x n blocks. The objective
/// attached to unitary families (U_i), (V_j) is
/// || sum_ij alpha_ij tensor U_i V_j ||.
struct BellProblem {
  Index d = 0;
  Index n = 0;
  std::vector<Matrix> alpha;  // d*d blocks, row-major

  const Matrix& a(Index i, Index j) const {
    return alpha[static_cast<std::size_t>(i * d + j)];
  }
};

inline void validate_bell_problem(const BellProblem& prob) {
  if (prob.d < 1 || prob.n < 1)
    throw InvalidSize("bell problem needs d >= 1, n >= 1, got d=" + std::to_string(prob.d) +
                      " n=" + std::to_string(prob.n));
  if (prob.alpha.size() != static_cast<std::size_t>(prob.d * prob.d))
    throw InvalidSize("bell problem needs d*d coefficient blocks, got " +
                      std::to_string(prob.alpha.size()));
  for (const Matrix& a : prob.alpha) {
    require_square(a, "validate_bell_problem");
    if (a.rows() != prob.n)
      throw DimensionMismatch("coefficient block dim " + std::to_string(a.rows()) +
                              " vs declared n=" + std::to_string(prob.n));
    if (!all_finite(a)) throw InvalidSize("coefficient block has non-finite entries");
  }
}

/// CHSH coefficients: scalar blocks {{1,1},{1,-1}}.
inline BellProblem chsh_problem() {
  BellProblem prob;
  prob.d = 2;
  prob.n = 1;
  for (double c : {1.0, 1.0, 1.0, -1.0}) {
    Matrix block(1, 1);
    block(0, 0) = c;
    prob.alpha.push_back(block);
  }
  return prob;
}

inline Matrix bell_operator(const BellProblem& prob, const std::vector<Matrix>& u_fam,
                            const std::vector<Matrix>& v_fam) {
  validate_bell_problem(prob);
  if (u_fam.size() != static_cast<std::size_t>(prob.d) || v_fam.size() != u_fam.size())
    throw InvalidSize("bell_operator: need d=" + std::to_string(prob.d) +
                      " unitaries per side, got " + std::to_string(u_fam.size()) + " and " +
                      std::to_string(v_fam.size()));
  const Index k = u_fam[0].rows();
  for (const auto* fam : {&u_fam, &v_fam})
    for (const Matrix& w : *fam) {
      require_square(w, "bell_operator");
      if (w.rows() != k) throw DimensionMismatch("bell_operator: mixed witness dimensions");
    }
  Matrix t = Matrix::Zero(prob.n * k, prob.n * k);
  for (Index i = 0; i < prob.d; ++i)
    for (Index j = 0; j < prob.d; ++j)
      t += kron(prob.a(i, j), u_fam[static_cast<std::size_t>(i)] * v_fam[static_cast<std::size_t>(j)]);
  return t;
}

inline double bell_objective(const BellProblem& prob, const std::vector<Matrix>& u_fam,
                             const std::vector<Matrix>& v_fam) {
  return op_norm(bell_operator(prob, u_fam, v_fam));
}

/// Gauge fix U_1 = V_1 = 1: multiplies the U family by U_1* on the left and
/// the V family by V_1* on the right. This conjugates the Bell operator by
/// unitaries, so the objective is untouched.
inline void normalize_first_unitaries(std::vector<Matrix>& u_fam, std::vector<Matrix>& v_fam) {
  if (u_fam.empty() || v_fam.empty())
    throw InvalidSize("normalize_first_unitaries: empty family");
  const Matrix gu = u_fam[0].adjoint();
  const Matrix gv = v_fam[0].adjoint();
  for (Matrix& u : u_fam) u = gu * u;
  for (Matrix& v : v_fam) v = v * gv;
}

struct SeesawConfig {
  Index dim_k = 2;          // witness dimension (per tensor leg in the commuting solver)
  int max_sweeps = 400;
  int restarts = 8;
  double penalty_weight = -1.0;  // negative means 10 * sum of coefficient block norms
  std::optional<double> epsilon_budget;
  RandomSeed seed{12345};
  double convergence_tol = 1e-10;
};

struct SweepTrace {
  std::vector<double> values;                // Re<eta, T xi> after each full sweep
  std::vector<std::uint8_t> penalty_active;  // 1 when some commutator exceeded the budget
  bool converged = false;
};

struct SeesawResult {
  double value = 0;  // op norm of the Bell operator at the returned witnesses
  std::vector<Matrix> witnesses_u;
  std::vector<Matrix> witnesses_v;
  double measured_eps = 0;
  bool converged = false;
  int best_restart = -1;  // -1 marks a carried-over warm start
  std::vector<double> restart_values;  // NaN for restarts with no feasible iterate
  std::vector<SweepTrace> traces;
};

namespace detail {

inline void check_seesaw_config(const SeesawConfig& cfg) {
  if (cfg.dim_k < 1) throw InvalidSize("seesaw: dim_k must be >= 1");
  if (cfg.max_sweeps < 1) throw InvalidSize("seesaw: max_sweeps must be >= 1");
  if (cfg.restarts < 1) throw InvalidSize("seesaw: restarts must be >= 1");
  if (!(cfg.convergence_tol >= 0)) throw InvalidSize("seesaw: convergence_tol must be >= 0");
}

inline double resolved_penalty_weight(const BellProblem& prob, const SeesawConfig& cfg) {
  if (cfg.penalty_weight >= 0) return cfg.penalty_weight;
  double total = 0;
  for (const Matrix& a : prob.alpha) total += op_norm(a);
  return 10.0 * total;
}

/// Largest divisor <= sqrt(k) and its cofactor; tensor legs for exactly
/// commuting witnesses on a k-dimensional space.
inline std::pair<Index, Index> split_dims(Index k) {
  for (Index a = static_cast<Index>(std::sqrt(static_cast<double>(k))); a >= 1; --a)
    if (k % a == 0) return {a, k / a};
  return {1, k};
}

inline void top_singular_pair(const Matrix& t, Vector& eta, Vector& xi, double& sigma) {
  Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  eta = svd.matrixU().col(0);
  xi = svd.matrixV().col(0);
  sigma = svd.singularValues()(0);
}

/// M(u, u') = sum_{p p'} conj(eta[p,u]) alpha(p,p') xi[p',u'], the k x k
/// coefficient extracted from the vector pair; composite index p*k + u.
inline Matrix pair_coefficient(const Matrix& alpha, const Vector& eta, const Vector& xi,
                               Index n, Index k) {
  Matrix eta_mat(n, k), xi_mat(n, k);
  for (Index p = 0; p < n; ++p)
    for (Index u = 0; u < k; ++u) {
      eta_mat(p, u) = eta(p * k + u);
      xi_mat(p, u) = xi(p * k + u);
    }
  return eta_mat.adjoint() * alpha * xi_mat;
}

struct RunOutcome {
  bool feasible = false;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<Matrix> u, v;
  double measured = 0;
  SweepTrace trace;
};

// See-saw over exactly commuting witnesses u_i tensor 1 and 1 tensor v_j on
// legs of size la and lb. Alternates the top-singular-vector step with the
// closed-form unitary update u = polar(C*), which maximizes Re tr(uC).
inline RunOutcome run_split_seesaw(const BellProblem& prob, Index la, Index lb, RandomSeed seed,
                                   int max_sweeps, double tol) {
  const Index d = prob.d, n = prob.n, k = la * lb;
  Rng rng(seed);
  std::vector<Matrix> u(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(d));
  for (auto& w : u) w = haar_unitary(la, rng);
  for (auto& w : v) w = haar_unitary(lb, rng);

  auto build = [&]() {
    Matrix t = Matrix::Zero(n * k, n * k);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j)
        t += kron(prob.a(i, j), kron(u[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]));
    return t;
  };

  RunOutcome out;
  Matrix t = build();
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Vector eta, xi;
    double sigma = 0;
    top_singular_pair(t, eta, xi, sigma);
    std::vector<Matrix> m(static_cast<std::size_t>(d * d));
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j)
        m[static_cast<std::size_t>(i * d + j)] = pair_coefficient(prob.a(i, j), eta, xi, n, k);

    for (Index i = 0; i < d; ++i) {
      Matrix c = Matrix::Zero(la, la);
      for (Index j = 0; j < d; ++j) {
        const Matrix& mij = m[static_cast<std::size_t>(i * d + j)];
        const Matrix& vj = v[static_cast<std::size_t>(j)];
        for (Index q = 0; q < la; ++q)
          for (Index q2 = 0; q2 < la; ++q2)
            for (Index r = 0; r < lb; ++r)
              for (Index r2 = 0; r2 < lb; ++r2)
                c(q2, q) += vj(r, r2) * mij(q * lb + r, q2 * lb + r2);
      }
      u[static_cast<std::size_t>(i)] = polar_unitary(c.adjoint());
    }
    for (Index j = 0; j < d; ++j) {
      Matrix dcoef = Matrix::Zero(lb, lb);
      for (Index i = 0; i < d; ++i) {
        const Matrix& mij = m[static_cast<std::size_t>(i * d + j)];
        const Matrix& ui = u[static_cast<std::size_t>(i)];
        for (Index r = 0; r < lb; ++r)
          for (Index r2 = 0; r2 < lb; ++r2)
            for (Index q = 0; q < la; ++q)
              for (Index q2 = 0; q2 < la; ++q2)
                dcoef(r2, r) += ui(q, q2) * mij(q * lb + r, q2 * lb + r2);
      }
      v[static_cast<std::size_t>(j)] = polar_unitary(dcoef.adjoint());
    }

    t = build();
    const double val = (eta.adjoint() * t * xi)(0, 0).real();
    out.trace.values.push_back(val);
    out.trace.penalty_active.push_back(0);
    if (sweep > 0 && std::abs(val - prev) <= tol) {
      out.trace.converged = true;
      prev = val;
      break;
    }
    prev = val;
  }

  out.u.reserve(static_cast<std::size_t>(d));
  out.v.reserve(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) out.u.push_back(kron(u[static_cast<std::size_t>(i)], identity(lb)));
  for (Index j = 0; j < d; ++j) out.v.push_back(kron(identity(la), v[static_cast<std::size_t>(j)]));
  double measured = 0;
  for (const Matrix& bu : out.u)
    for (const Matrix& bv : out.v) measured = std::max(measured, commutator_norm(bu, bv));
  out.measured = measured;  // exactly zero: the tensor legs never mix
  out.feasible = true;
  Matrix t_big = Matrix::Zero(n * k, n * k);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      t_big += kron(prob.a(i, j),
                    out.u[static_cast<std::size_t>(i)] * out.v[static_cast<std::size_t>(j)]);
  out.value = op_norm(t_big);
  return out;
}

// See-saw over unconstrained unitaries on C^k with a quadratic hinge penalty
// on commutators above the budget. Each unitary update linearizes the active
// hinge terms around the current point, proposes the polar maximizer, and
// falls back along a retraction toward the old iterate when the exact local
// penalized objective would drop. The best feasible iterate across sweeps is
// what the run reports.
inline RunOutcome run_penalty_seesaw(const BellProblem& prob, Index k, double eps, double weight,
                                     RandomSeed seed, int max_sweeps, double tol) {
  const Index d = prob.d, n = prob.n;
  Rng rng(seed);
  std::vector<Matrix> u(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(d));
  for (auto& w : u) w = haar_unitary(k, rng);
  for (auto& w : v) w = haar_unitary(k, rng);

  auto build = [&]() {
    Matrix t = Matrix::Zero(n * k, n * k);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j)
        t += kron(prob.a(i, j), u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)]);
    return t;
  };
  auto hinge = [eps](double s) { return std::max(0.0, s - eps); };

  RunOutcome out;
  bool have_best = false;
  double best_raw = -std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_u, best_v;

  Matrix t = build();
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Vector eta, xi;
    double sigma = 0;
    top_singular_pair(t, eta, xi, sigma);
    std::vector<Matrix> m(static_cast<std::size_t>(d * d));
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j)
        m[static_cast<std::size_t>(i * d + j)] = pair_coefficient(prob.a(i, j), eta, xi, n, k);
    bool active = false;

    // local penalized objective in one unitary, everything else fixed
    auto axis_objective = [&](const Matrix& w, const Matrix& lin,
                              const std::vector<Matrix>& others, bool w_is_u) {
      double f = (w * lin).trace().real();
      for (const Matrix& o : others) {
        const double s = w_is_u ? commutator_norm(w, o) : commutator_norm(o, w);
        const double h = hinge(s);
        f -= weight * h * h;
      }
      return f;
    };
    auto update_axis = [&](Matrix& w, const Matrix& lin, const std::vector<Matrix>& others,
                           bool w_is_u) {
      Matrix model = lin;  // coefficient of the linearized penalized objective, tr(w model)
      for (const Matrix& o : others) {
        const Matrix comm = w_is_u ? (w * o - o * w) : (o * w - w * o);
        const double s = op_norm(comm);
        if (s <= eps) continue;
        active = true;
        Vector ceta, cxi;
        double csig = 0;
        top_singular_pair(comm, ceta, cxi, csig);
        const Matrix outer = cxi * ceta.adjoint();
        const Matrix grad = w_is_u ? (o * outer - outer * o) : (outer * o - o * outer);
        model -= 2.0 * weight * (s - eps) * grad;
      }
      const double f_old = axis_objective(w, lin, others, w_is_u);
      const Matrix proposal = polar_unitary(model.adjoint());
      for (double tstep : {1.0, 0.5, 0.25, 0.125}) {
        const Matrix cand =
            (tstep == 1.0) ? proposal : polar_unitary((1.0 - tstep) * w + tstep * proposal);
        if (axis_objective(cand, lin, others, w_is_u) >= f_old) {
          w = cand;
          return;
        }
      }
    };

    for (Index i = 0; i < d; ++i) {
      Matrix c = Matrix::Zero(k, k);
      for (Index j = 0; j < d; ++j)
        c += v[static_cast<std::size_t>(j)] * m[static_cast<std::size_t>(i * d + j)].transpose();
      update_axis(u[static_cast<std::size_t>(i)], c, v, true);
    }
    for (Index j = 0; j < d; ++j) {
      Matrix dcoef = Matrix::Zero(k, k);
      for (Index i = 0; i < d; ++i)
        dcoef += m[static_cast<std::size_t>(i * d + j)].transpose() * u[static_cast<std::size_t>(i)];
      update_axis(v[static_cast<std::size_t>(j)], dcoef, u, false);
    }

    t = build();
    const double val = (eta.adjoint() * t * xi)(0, 0).real();
    out.trace.values.push_back(val);
    out.trace.penalty_active.push_back(active ? 1 : 0);

    double measured = 0;
    for (const Matrix& bu : u)
      for (const Matrix& bv : v) measured = std::max(measured, commutator_norm(bu, bv));
    if (measured <= eps && (!have_best || val > best_raw)) {
      have_best = true;
      best_raw = val;
      best_u = u;
      best_v = v;
    }
    if (sweep > 0 && std::abs(val - prev) <= tol) {
      out.trace.converged = true;
      prev = val;
      break;
    }
    prev = val;
  }

  if (!have_best) return out;  // infeasible run, value stays NaN
  out.feasible = true;
  out.u = std::move(best_u);
  out.v = std::move(best_v);
  double measured = 0;
  for (const Matrix& bu : out.u)
    for (const Matrix& bv : out.v) measured = std::max(measured, commutator_norm(bu, bv));
  out.measured = measured;
  out.value = bell_objective(prob, out.u, out.v);
  return out;
}

struct WarmStart {
  std::vector<Matrix> u, v;
};

inline SeesawResult seesaw_eps_internal(const BellProblem& prob, const SeesawConfig& cfg,
                                        const WarmStart* warm) {
  validate_bell_problem(prob);
  check_seesaw_config(cfg);
  if (!cfg.epsilon_budget)
    throw InvalidSize("seesaw_eps_commuting: config needs an epsilon_budget");
  const double eps = *cfg.epsilon_budget;
  if (!(eps >= 0)) throw InvalidSize("seesaw_eps_commuting: epsilon_budget must be >= 0");
  const double weight = resolved_penalty_weight(prob, cfg);
  const auto [la, lb] = split_dims(cfg.dim_k);

  SeesawResult result;
  int best = -2;
  double best_value = -std::numeric_limits<double>::infinity();

  if (warm) {
    // Re-evaluating stored witnesses is deterministic, so a warm start can
    // never lose value against the run it came from.
    double measured = 0;
    for (const Matrix& bu : warm->u)
      for (const Matrix& bv : warm->v) measured = std::max(measured, commutator_norm(bu, bv));
    if (measured <= eps) {
      const double value = bell_objective(prob, warm->u, warm->v);
      best = -1;
      best_value = value;
      result.witnesses_u = warm->u;
      result.witnesses_v = warm->v;
      result.measured_eps = measured;
      result.converged = true;
    }
  }

  for (int r = 0; r < cfg.restarts; ++r) {
    const RandomSeed child = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    RunOutcome run;
    // Restart 0 (and every restart when eps is 0, where a random pair is
    // never feasible) searches the exactly commuting tensor-split ansatz;
    // the rest run the penalized unconstrained search.
    if (r == 0 || eps == 0.0)
      run = run_split_seesaw(prob, la, lb, child, cfg.max_sweeps, cfg.convergence_tol);
    else
      run = run_penalty_seesaw(prob, cfg.dim_k, eps, weight, child, cfg.max_sweeps,
                               cfg.convergence_tol);
    result.restart_values.push_back(run.value);
    result.traces.push_back(run.trace);
    if (run.feasible && run.measured <= eps && run.value > best_value) {
      best = r;
      best_value = run.value;
      result.witnesses_u = run.u;
      result.witnesses_v = run.v;
      result.measured_eps = run.measured;
      result.converged = run.trace.converged;
    }
  }

  if (best == -2) throw Infeasible("seesaw_eps_commuting: no feasible iterate found");
  result.best_restart = best;
  result.value = best_value;
  return result;
}

}  // namespace detail

/// Maximizes the Bell objective over exactly commuting witnesses
/// U_i = u_i tensor 1, V_j = 1 tensor v_j with both legs of size dim_k.
inline SeesawResult seesaw_commuting(const BellProblem& prob, const SeesawConfig& cfg) {
  validate_bell_problem(prob);
  detail::check_seesaw_config(cfg);
  SeesawResult result;
  int best = -2;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    const RandomSeed child = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    detail::RunOutcome run = detail::run_split_seesaw(prob, cfg.dim_k, cfg.dim_k, child,
                                                      cfg.max_sweeps, cfg.convergence_tol);
    result.restart_values.push_back(run.value);
    result.traces.push_back(run.trace);
    if (run.value > best_value) {
      best = r;
      best_value = run.value;
      result.witnesses_u = run.u;
      result.witnesses_v = run.v;
      result.measured_eps = run.measured;
      result.converged = run.trace.converged;
    }
  }
  result.best_restart = best;
  result.value = best_value;
  return result;
}

/// Maximizes the Bell objective over witnesses whose pairwise commutators
/// stay within cfg.epsilon_budget. Restart 0 seeds the feasible set with the
/// commuting ansatz, so the optimum can only improve on seesaw_commuting.
inline SeesawResult seesaw_eps_commuting(const BellProblem& prob, const SeesawConfig& cfg) {
  return detail::seesaw_eps_internal(prob, cfg, nullptr);
}

struct SweepResult {
  std::vector<double> epsilons;
  std::vector<double> values;
  std::vector<double> measured_eps;
  std::vector<int> best_restart;  // -1 when the carried-over witnesses won
  std::vector<std::string> flags;  // "ok", "noise" (value dropped), "infeasible"
  std::vector<std::vector<Matrix>> witnesses_u;
  std::vector<std::vector<Matrix>> witnesses_v;
};

/// Runs the budgeted see-saw along an ascending list of budgets, feeding each
/// entry's best witnesses into the next as a warm-start candidate. The
/// carried candidate re-evaluates to exactly its old value, so values can
/// only be monotone up to solver noise, which the flag column records.
inline SweepResult epsilon_sweep(const BellProblem& prob, const std::vector<double>& epsilons,
                                 const SeesawConfig& cfg) {
  validate_bell_problem(prob);
  detail::check_seesaw_config(cfg);
  if (epsilons.empty()) throw InvalidSize("epsilon_sweep: need at least one budget");
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    if (!(epsilons[e] >= 0)) throw InvalidSize("epsilon_sweep: budgets must be >= 0");
    if (e > 0 && epsilons[e] < epsilons[e - 1])
      throw InvalidSize("epsilon_sweep: budgets must be ascending");
  }

  SweepResult sweep;
  detail::WarmStart warm;
  bool have_warm = false;
  double prev_value = 0;
  bool have_prev = false;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    SeesawConfig entry_cfg = cfg;
    entry_cfg.epsilon_budget = epsilons[e];
    entry_cfg.seed = derive_seed(cfg.seed, 0x5eedull + e);
    SeesawResult res;
    bool feasible = true;
    try {
      res = detail::seesaw_eps_internal(prob, entry_cfg, have_warm ? &warm : nullptr);
    } catch (const Infeasible&) {
      feasible = false;
    }
    sweep.epsilons.push_back(epsilons[e]);
    if (!feasible) {
      sweep.values.push_back(std::numeric_limits<double>::quiet_NaN());
      sweep.measured_eps.push_back(std::numeric_limits<double>::quiet_NaN());
      sweep.best_restart.push_back(-2);
      sweep.flags.push_back("infeasible");
      sweep.witnesses_u.emplace_back();
      sweep.witnesses_v.emplace_back();
      continue;
    }
    sweep.values.push_back(res.value);
    sweep.measured_eps.push_back(res.measured_eps);
    sweep.best_restart.push_back(res.best_restart);
    const bool dropped = have_prev && res.value < prev_value - 1e-9;
    sweep.flags.push_back(dropped ? "noise" : "ok");
    sweep.witnesses_u.push_back(res.witnesses_u);
    sweep.witnesses_v.push_back(res.witnesses_v);
    warm.u = res.witnesses_u;
    warm.v = res.witnesses_v;
    have_warm = true;
    prev_value = res.value;
    have_prev = true;
  }
  return sweep;
}

}  // namespace epscomm
