// Command-line front end: fixture generation, validation, correlation
// matrices, the three dilations, see-saw runs and epsilon sweeps. Everything
// speaks the JSON formats from epscomm/io.hpp; exit code 0 means all checks
// passed, 1 a domain failure, 2 a usage or parse problem.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epscomm/epscomm.hpp"

namespace {

using epscomm::Index;
using epscomm::Json;
using epscomm::Matrix;

struct ToleranceFlag {
  double value;
  bool set = false;
};

// explicit --tol beats ACL_TOL beats the per-command default
double resolve_tol(const ToleranceFlag& flag, const std::optional<double>& env_tol,
                   double fallback) {
  if (flag.set) return flag.value;
  if (env_tol) return *env_tol;
  return fallback;
}

std::optional<double> read_env_tol() {
  const char* raw = std::getenv("ACL_TOL");
  if (!raw || !*raw) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(raw, &end);
  if (end == raw || *end != '\0' || !(v >= 0))
    throw epscomm::ParseError("ACL_TOL: cannot parse '" + std::string(raw) +
                              "' as a nonnegative number");
  return v;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  std::random_device rd;
  const std::uint64_t drawn =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  std::cerr << "seed: " << drawn << "\n";
  return drawn;
}

void emit(const Json& j, const std::string& output_path) {
  if (output_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    epscomm::save_json_file(output_path, j);
}

Json diagnostics_to_json(const epscomm::PovmDiagnostics& diag) {
  return Json{{"pass", diag.pass},
              {"tol", diag.tol},
              {"max_hermiticity_defect", diag.max_hermiticity_defect},
              {"min_eigenvalue", diag.min_eigenvalue},
              {"sum_defect", diag.sum_defect},
              {"operator_min_eigenvalues", diag.operator_min_eigenvalues}};
}

int run_validate(const std::string& input, double tol) {
  const Json j = epscomm::load_json_file(input);
  Json report;
  bool pass = false;
  if (j.contains("alice")) {
    const epscomm::MeasurementSystem sys = epscomm::system_from_json(j);
    report["type"] = "measurement_system";
    report["dim"] = sys.dim;
    report["m"] = sys.m;
    report["d"] = sys.d();
    pass = true;
    std::string reason;
    try {
      epscomm::validate_measurement_system(sys, tol);
    } catch (const epscomm::Error& e) {
      pass = false;
      reason = e.what();
    }
    Json alice = Json::array(), bob = Json::array();
    for (const auto& f : sys.alice) alice.push_back(diagnostics_to_json(epscomm::validate_povm(f, tol)));
    for (const auto& f : sys.bob) bob.push_back(diagnostics_to_json(epscomm::validate_povm(f, tol)));
    report["alice"] = std::move(alice);
    report["bob"] = std::move(bob);
    if (pass) report["max_commutator"] = epscomm::max_commutator(sys);
    if (!reason.empty()) report["reason"] = reason;
  } else if (j.contains("operators")) {
    const epscomm::PovmFamily f = epscomm::povm_from_json(j);
    const epscomm::PovmDiagnostics diag = epscomm::validate_povm(f, tol);
    report = diagnostics_to_json(diag);
    report["type"] = "povm";
    report["dim"] = f.dim;
    report["outcomes"] = f.outcomes();
    report["projectivity_defect"] = epscomm::projectivity_defect(f);
    pass = diag.pass;
  } else {
    throw epscomm::ParseError(input + ": neither a POVM family nor a measurement system");
  }
  report["pass"] = pass;
  std::cout << report.dump(2) << "\n";
  return pass ? 0 : 1;
}

int run_gen(const std::string& kind, Index dim, Index outcomes, Index families, Index size,
            const std::optional<std::uint64_t>& seed_flag, const std::string& output) {
  Json out;
  if (kind == "povm") {
    out = epscomm::povm_to_json(
        epscomm::random_povm(dim, outcomes, epscomm::RandomSeed{resolve_seed(seed_flag)}));
  } else if (kind == "projective") {
    out = epscomm::povm_to_json(epscomm::random_projective_povm(
        dim, outcomes, epscomm::RandomSeed{resolve_seed(seed_flag)}));
  } else if (kind == "system") {
    const epscomm::RandomSeed base{resolve_seed(seed_flag)};
    epscomm::MeasurementSystem sys;
    sys.dim = dim;
    sys.m = outcomes;
    for (Index k = 0; k < families; ++k) {
      sys.alice.push_back(
          epscomm::random_povm(dim, outcomes, epscomm::derive_seed(base, 2 * static_cast<std::uint64_t>(k))));
      sys.bob.push_back(epscomm::random_povm(
          dim, outcomes, epscomm::derive_seed(base, 2 * static_cast<std::uint64_t>(k) + 1)));
    }
    out = epscomm::system_to_json(sys);
  } else if (kind == "voiculescu") {
    const auto [u, v] = epscomm::voiculescu_pair(size);
    out = Json{{"u", epscomm::matrix_to_json(u)}, {"v", epscomm::matrix_to_json(v)}};
  } else if (kind == "chsh") {
    out = epscomm::bell_problem_to_json(epscomm::chsh_problem());
  } else {
    throw epscomm::ParseError("gen: unknown kind '" + kind + "'");
  }
  emit(out, output);
  return 0;
}

int run_corr(const std::string& input, const std::string& output, double tol) {
  const epscomm::MeasurementSystem sys =
      epscomm::system_from_json(epscomm::load_json_file(input));
  const epscomm::Isometry full =
      epscomm::Isometry::coordinate_embedding(sys.dim, sys.dim, 0);
  const epscomm::CorrelationMatrix corr = epscomm::correlation_matrix(sys, full, tol);
  const Json summary{{"d", corr.d},
                     {"m", corr.m},
                     {"n", corr.n},
                     {"sum_defect", epscomm::correlation_sum_defect(corr)},
                     {"min_eigenvalue", epscomm::correlation_min_eigenvalue(corr)},
                     {"max_commutator", epscomm::max_commutator(sys)}};
  std::cout << summary.dump(2) << "\n";
  if (!output.empty()) epscomm::save_json_file(output, epscomm::correlation_to_json(corr));
  return 0;
}

int run_dilate(const std::string& kind, const std::string& input, const std::string& output,
               const std::optional<double>& epsilon, const std::optional<Index>& window,
               Index torus_size, double tol) {
  const Json j = epscomm::load_json_file(input);
  epscomm::DilationResult result;
  Json summary;
  if (kind == "naimark") {
    const epscomm::MeasurementSystem sys = epscomm::system_from_json(j);
    if (sys.d() < 1) throw epscomm::InvalidSize("dilate: system has no families");
    result = epscomm::naimark_projective_dilation(sys.alice[0], sys.bob[0], tol);
    double proj_defect = 0;
    for (const auto* side : {&result.dilated_alice, &result.dilated_bob}) {
      epscomm::PovmFamily fam;
      fam.dim = result.ambient_dim;
      for (const auto& op : *side) fam.operators.push_back(std::get<Matrix>(op));
      proj_defect = std::max(proj_defect, epscomm::projectivity_defect(fam));
    }
    summary["projectivity_defect"] = proj_defect;
  } else if (kind == "folner") {
    const Matrix u = epscomm::matrix_from_json(epscomm::detail::need_field(j, "u", "unitary pair"));
    const Matrix v = epscomm::matrix_from_json(epscomm::detail::need_field(j, "v", "unitary pair"));
    const double measured = epscomm::commutator_norm(u, v);
    epscomm::FolnerParams params;
    if (window) {
      params.m = *window;
      params.epsilon = epsilon.value_or(measured);
    } else if (epsilon) {
      params = epscomm::FolnerParams::for_epsilon(*epsilon);
    } else if (measured > 0) {
      params = epscomm::FolnerParams::for_epsilon(measured);
    } else {
      throw epscomm::InvalidSize("dilate: exactly commuting inputs need --window");
    }
    if (torus_size > 0) params.torus = torus_size;
    result = epscomm::folner_dilation(u, v, params);
    summary["measured_commutator"] = measured;
    summary["window"] = params.m;
    summary["torus"] = params.torus > 0 ? params.torus : params.m + 2;
    summary["epsilon"] = params.epsilon;
    summary["defect_bound"] = epscomm::folner_defect_bound(params.m, params.epsilon);
    if (params.epsilon > 0)
      summary["bound_two_sqrt_eps"] = 2.0 * std::sqrt(params.epsilon);
  } else if (kind == "contraction") {
    const Matrix x = epscomm::matrix_from_json(epscomm::detail::need_field(j, "x", "contraction pair"));
    const Matrix y = epscomm::matrix_from_json(epscomm::detail::need_field(j, "y", "contraction pair"));
    result = epscomm::contraction_dilation(x, y);
  } else {
    throw epscomm::ParseError("dilate: unknown kind '" + kind + "'");
  }
  summary["kind"] = kind;
  summary["ambient_dim"] = result.ambient_dim;
  summary["defect_alice"] = result.defect_alice;
  summary["defect_bob"] = result.defect_bob;
  summary["dilated_commutator"] = result.dilated_commutator;
  std::cout << summary.dump(2) << "\n";
  if (!output.empty())
    epscomm::save_json_file(output, epscomm::dilation_result_to_json(result, kind));
  return 0;
}

epscomm::SeesawConfig seesaw_config(Index dim_k, int restarts, int sweeps,
                                    const std::optional<std::uint64_t>& seed_flag) {
  epscomm::SeesawConfig cfg;
  cfg.dim_k = dim_k;
  cfg.restarts = restarts;
  cfg.max_sweeps = sweeps;
  cfg.seed = epscomm::RandomSeed{resolve_seed(seed_flag)};
  return cfg;
}

int run_bell(const std::string& input, const std::string& output, Index dim_k, int restarts,
             int sweeps, const std::optional<std::uint64_t>& seed_flag,
             const std::optional<double>& epsilon) {
  const epscomm::BellProblem prob =
      epscomm::bell_problem_from_json(epscomm::load_json_file(input));
  epscomm::SeesawConfig cfg = seesaw_config(dim_k, restarts, sweeps, seed_flag);
  epscomm::SeesawResult res;
  if (epsilon) {
    cfg.epsilon_budget = *epsilon;
    res = epscomm::seesaw_eps_commuting(prob, cfg);
  } else {
    res = epscomm::seesaw_commuting(prob, cfg);
  }
  std::cout << epscomm::seesaw_result_to_json(res, false).dump(2) << "\n";
  if (!output.empty())
    epscomm::save_json_file(output, epscomm::seesaw_result_to_json(res, true));
  return 0;
}

int run_sweep(const std::string& input, const std::string& output,
              const std::vector<double>& epsilons, Index dim_k, int restarts, int sweeps,
              const std::optional<std::uint64_t>& seed_flag, const std::string& format) {
  const epscomm::BellProblem prob =
      epscomm::bell_problem_from_json(epscomm::load_json_file(input));
  const epscomm::SeesawConfig cfg = seesaw_config(dim_k, restarts, sweeps, seed_flag);
  const epscomm::SweepResult sweep = epscomm::epsilon_sweep(prob, epsilons, cfg);

  bool any_feasible = false;
  for (const std::string& flag : sweep.flags) any_feasible |= (flag != "infeasible");

  if (format == "csv") {
    const std::string csv = epscomm::sweep_to_csv(sweep);
    if (output.empty())
      std::cout << csv;
    else
      epscomm::save_text_file(output, csv);
  } else if (format == "json") {
    emit(epscomm::sweep_to_json(sweep), output);
  } else {
    throw epscomm::ParseError("sweep: unknown format '" + format + "'");
  }
  if (!any_feasible) {
    std::cerr << "error: every budget was infeasible\n";
    return 1;
  }
  return 0;
}

int run_report(const std::string& input, const std::string& against, double tol) {
  const epscomm::DilationResult result =
      epscomm::dilation_result_from_json(epscomm::load_json_file(input));
  const Json j = epscomm::load_json_file(against);
  std::vector<Matrix> alice, bob;
  if (j.contains("alice")) {
    const epscomm::MeasurementSystem sys = epscomm::system_from_json(j);
    if (sys.d() < 1) throw epscomm::InvalidSize("report: system has no families");
    alice = sys.alice[0].operators;
    bob = sys.bob[0].operators;
  } else if (j.contains("u") && j.contains("v")) {
    alice.push_back(epscomm::matrix_from_json(j["u"]));
    bob.push_back(epscomm::matrix_from_json(j["v"]));
  } else if (j.contains("x") && j.contains("y")) {
    alice.push_back(epscomm::matrix_from_json(j["x"]));
    bob.push_back(epscomm::matrix_from_json(j["y"]));
  } else {
    throw epscomm::ParseError(against + ": expected a measurement system or an operator pair");
  }
  const epscomm::DilationReport report = epscomm::dilation_report(result, alice, bob, tol);
  Json out{{"consistent", report.consistent},
           {"max_discrepancy", report.max_discrepancy},
           {"defect_alice", report.defect_alice},
           {"defect_bob", report.defect_bob},
           {"dilated_commutator", report.dilated_commutator}};
  if (report.product_residual) out["product_residual"] = *report.product_residual;
  std::cout << out.dump(2) << "\n";
  return report.consistent ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-dimensional constructions for nearly commuting measurement systems"};
  app.require_subcommand(1);

  std::string input, output, against, kind, format = "csv";
  ToleranceFlag tol;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<Index> window;
  std::vector<double> epsilons;
  Index dim = 3, outcomes = 2, families = 1, size = 8, dim_k = 2, torus_size = 0;
  int restarts = 8, sweeps = 400;

  auto add_tol = [&](CLI::App* sub) {
    sub->add_option("--tol", tol.value, "tolerance override")->each([&](const std::string&) {
      tol.set = true;
    });
  };

  CLI::App* validate = app.add_subcommand("validate", "check a POVM family or measurement system");
  validate->add_option("--input", input, "JSON file to check")->required();
  add_tol(validate);

  CLI::App* gen = app.add_subcommand("gen", "write a fixture");
  gen->add_option("--kind", kind, "povm|projective|system|voiculescu|chsh")->required();
  gen->add_option("--dim", dim, "space dimension");
  gen->add_option("--outcomes", outcomes, "outcomes per family");
  gen->add_option("--families", families, "families per side (system)");
  gen->add_option("--size", size, "matrix size (voiculescu)");
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--output", output, "file to write, stdout when absent");

  CLI::App* corr = app.add_subcommand("corr", "correlation matrix of a measurement system");
  corr->add_option("--input", input, "measurement system JSON")->required();
  corr->add_option("--output", output, "write the full correlation matrix here");
  add_tol(corr);

  CLI::App* dilate = app.add_subcommand("dilate", "run a dilation");
  dilate->add_option("--kind", kind, "naimark|folner|contraction")->required();
  dilate->add_option("--input", input, "input JSON (system or operator pair)")->required();
  dilate->add_option("--output", output, "write the dilation result here");
  dilate->add_option("--epsilon", epsilon, "commutator budget (folner)");
  dilate->add_option("--window", window, "averaging window size (folner)");
  dilate->add_option("--torus-size", torus_size, "ambient torus side (folner)");
  add_tol(dilate);

  CLI::App* bell = app.add_subcommand("bell", "see-saw a Bell-type norm");
  bell->add_option("--input", input, "Bell problem JSON")->required();
  bell->add_option("--output", output, "write the full result incl. witnesses here");
  bell->add_option("--dim-k", dim_k, "witness dimension");
  bell->add_option("--restarts", restarts, "random restarts");
  bell->add_option("--sweeps", sweeps, "max sweeps per restart");
  bell->add_option("--seed", seed, "random seed");
  bell->add_option("--epsilon", epsilon, "commutator budget; omit for exactly commuting");

  CLI::App* sweep = app.add_subcommand("sweep", "value vs commutator budget");
  sweep->add_option("--input", input, "Bell problem JSON")->required();
  sweep->add_option("--epsilons", epsilons, "comma-separated ascending budgets")
      ->required()
      ->delimiter(',');
  sweep->add_option("--output", output, "file to write, stdout when absent");
  sweep->add_option("--dim-k", dim_k, "witness dimension");
  sweep->add_option("--restarts", restarts, "random restarts per budget");
  sweep->add_option("--sweeps", sweeps, "max sweeps per restart");
  sweep->add_option("--seed", seed, "random seed");
  sweep->add_option("--format", format, "csv|json");

  CLI::App* report = app.add_subcommand("report", "recheck a stored dilation result");
  report->add_option("--input", input, "dilation result JSON")->required();
  report->add_option("--against", against, "original system or operator pair JSON")->required();
  add_tol(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::optional<double> env_tol = read_env_tol();
    if (tol.set && tol.value < 0) throw epscomm::ParseError("--tol must be nonnegative");
    if (validate->parsed()) return run_validate(input, resolve_tol(tol, env_tol, 1e-10));
    if (gen->parsed()) return run_gen(kind, dim, outcomes, families, size, seed, output);
    if (corr->parsed()) return run_corr(input, output, resolve_tol(tol, env_tol, 1e-8));
    if (dilate->parsed())
      return run_dilate(kind, input, output, epsilon, window, torus_size,
                        resolve_tol(tol, env_tol, 1e-8));
    if (bell->parsed()) return run_bell(input, output, dim_k, restarts, sweeps, seed, epsilon);
    if (sweep->parsed())
      return run_sweep(input, output, epsilons, dim_k, restarts, sweeps, seed, format);
    if (report->parsed()) return run_report(input, against, resolve_tol(tol, env_tol, 1e-10));
    return 2;
  } catch (const epscomm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const epscomm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
