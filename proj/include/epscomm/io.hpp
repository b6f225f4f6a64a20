#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epscomm/bell.hpp"
#include "epscomm/dilation.hpp"
#include "epscomm/measurement.hpp"

namespace epscomm {

using Json = nlohmann::json;

namespace detail {

// Shortest round-trip decimal form; what both the CSV writer and tests rely
// on for bit-exact reload.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline const Json& need_field(const Json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(std::string(what) + ": missing field \"" + key + "\"");
  return *it;
}

inline Index need_index(const Json& j, const char* key, const char* what) {
  const Json& f = need_field(j, key, what);
  if (!f.is_number_integer())
    throw ParseError(std::string(what) + ": field \"" + key + "\" must be an integer");
  return f.get<Index>();
}

}  // namespace detail

inline Json matrix_to_json(const Matrix& m) {
  if (!all_finite(m)) throw Error("matrix_to_json: non-finite entries are not representable");
  Json data = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      data.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("matrix: expected an object");
  const Index rows = detail::need_index(j, "rows", "matrix");
  const Index cols = detail::need_index(j, "cols", "matrix");
  if (rows < 0 || cols < 0) throw ParseError("matrix: negative dimensions");
  const Json& data = detail::need_field(j, "data", "matrix");
  if (!data.is_array() || data.size() != static_cast<std::size_t>(rows * cols))
    throw ParseError("matrix: data must hold rows*cols entries");
  Matrix m(rows, cols);
  std::size_t idx = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index g = 0; g < cols; ++g, ++idx) {
      const Json& cell = data[idx];
      if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number())
        throw ParseError("matrix: each entry must be a [re, im] pair of numbers");
      m(i, g) = Complex(cell[0].get<double>(), cell[1].get<double>());
    }
  return m;
}

inline Json povm_to_json(const PovmFamily& f) {
  Json ops = Json::array();
  for (const Matrix& op : f.operators) ops.push_back(matrix_to_json(op));
  return Json{{"dim", f.dim}, {"outcomes", f.outcomes()}, {"operators", std::move(ops)}};
}

inline PovmFamily povm_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("povm: expected an object");
  PovmFamily f;
  f.dim = detail::need_index(j, "dim", "povm");
  const Index outcomes = detail::need_index(j, "outcomes", "povm");
  const Json& ops = detail::need_field(j, "operators", "povm");
  if (!ops.is_array() || ops.size() != static_cast<std::size_t>(outcomes))
    throw ParseError("povm: operators must hold exactly \"outcomes\" matrices");
  for (const Json& op : ops) f.operators.push_back(matrix_from_json(op));
  for (const Matrix& op : f.operators)
    if (op.rows() != f.dim || op.cols() != f.dim)
      throw ParseError("povm: operator shape disagrees with dim");
  return f;
}

inline Json system_to_json(const MeasurementSystem& sys) {
  Json alice = Json::array(), bob = Json::array();
  for (const PovmFamily& f : sys.alice) alice.push_back(povm_to_json(f));
  for (const PovmFamily& f : sys.bob) bob.push_back(povm_to_json(f));
  return Json{{"dim", sys.dim}, {"m", sys.m}, {"alice", std::move(alice)}, {"bob", std::move(bob)}};
}

inline MeasurementSystem system_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("measurement system: expected an object");
  MeasurementSystem sys;
  sys.dim = detail::need_index(j, "dim", "measurement system");
  sys.m = detail::need_index(j, "m", "measurement system");
  const Json& alice = detail::need_field(j, "alice", "measurement system");
  const Json& bob = detail::need_field(j, "bob", "measurement system");
  if (!alice.is_array() || !bob.is_array())
    throw ParseError("measurement system: alice and bob must be arrays of POVMs");
  for (const Json& f : alice) sys.alice.push_back(povm_from_json(f));
  for (const Json& f : bob) sys.bob.push_back(povm_from_json(f));
  return sys;
}

inline Json correlation_to_json(const CorrelationMatrix& corr) {
  Json blocks = Json::array();
  for (const Matrix& b : corr.blocks) blocks.push_back(matrix_to_json(b));
  return Json{{"d", corr.d}, {"m", corr.m}, {"n", corr.n}, {"blocks", std::move(blocks)}};
}

inline CorrelationMatrix correlation_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("correlation matrix: expected an object");
  CorrelationMatrix corr;
  corr.d = detail::need_index(j, "d", "correlation matrix");
  corr.m = detail::need_index(j, "m", "correlation matrix");
  corr.n = detail::need_index(j, "n", "correlation matrix");
  const Json& blocks = detail::need_field(j, "blocks", "correlation matrix");
  const std::size_t expected = static_cast<std::size_t>(corr.side() * corr.side());
  if (!blocks.is_array() || blocks.size() != expected)
    throw ParseError("correlation matrix: needs (d*m)^2 blocks");
  for (const Json& b : blocks) {
    corr.blocks.push_back(matrix_from_json(b));
    if (corr.blocks.back().rows() != corr.n || corr.blocks.back().cols() != corr.n)
      throw ParseError("correlation matrix: block shape disagrees with n");
  }
  return corr;
}

inline Json dilated_operator_to_json(const DilatedOperator& op) {
  if (const auto* m = std::get_if<Matrix>(&op)) return matrix_to_json(*m);
  const ShiftUnitary& s = std::get<ShiftUnitary>(op);
  return Json{{"kind", "cyclic_shift"},
              {"torus", s.torus},
              {"inner_dim", s.inner_dim},
              {"step", Json::array({s.step_p, s.step_q})}};
}

inline DilatedOperator dilated_operator_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("dilated operator: expected an object");
  if (j.contains("rows")) return matrix_from_json(j);
  const Json& kind = detail::need_field(j, "kind", "dilated operator");
  if (kind != "cyclic_shift")
    throw ParseError("dilated operator: unknown kind " + kind.dump());
  ShiftUnitary s;
  s.torus = detail::need_index(j, "torus", "dilated operator");
  s.inner_dim = detail::need_index(j, "inner_dim", "dilated operator");
  const Json& step = detail::need_field(j, "step", "dilated operator");
  if (!step.is_array() || step.size() != 2 || !step[0].is_number_integer() ||
      !step[1].is_number_integer())
    throw ParseError("dilated operator: step must be a pair of integers");
  s.step_p = step[0].get<int>();
  s.step_q = step[1].get<int>();
  if (s.torus < 1 || s.inner_dim < 1) throw ParseError("dilated operator: bad shift dimensions");
  return s;
}

inline Json dilation_result_to_json(const DilationResult& r, const std::string& kind = "") {
  Json alice = Json::array(), bob = Json::array();
  for (const DilatedOperator& op : r.dilated_alice) alice.push_back(dilated_operator_to_json(op));
  for (const DilatedOperator& op : r.dilated_bob) bob.push_back(dilated_operator_to_json(op));
  Json out{{"ambient_dim", r.ambient_dim},
           {"isometry", matrix_to_json(r.isometry.matrix())},
           {"alice", std::move(alice)},
           {"bob", std::move(bob)},
           {"defects", Json{{"alice", r.defect_alice}, {"bob", r.defect_bob}}},
           {"dilated_commutator", r.dilated_commutator}};
  if (!kind.empty()) out["kind"] = kind;
  return out;
}

inline DilationResult dilation_result_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("dilation result: expected an object");
  DilationResult r;
  r.ambient_dim = detail::need_index(j, "ambient_dim", "dilation result");
  try {
    r.isometry = Isometry(matrix_from_json(detail::need_field(j, "isometry", "dilation result")));
  } catch (const NotIsometry& e) {
    throw ParseError(std::string("dilation result: stored isometry is invalid: ") + e.what());
  }
  for (const Json& op : detail::need_field(j, "alice", "dilation result"))
    r.dilated_alice.push_back(dilated_operator_from_json(op));
  for (const Json& op : detail::need_field(j, "bob", "dilation result"))
    r.dilated_bob.push_back(dilated_operator_from_json(op));
  const Json& defects = detail::need_field(j, "defects", "dilation result");
  r.defect_alice = detail::need_field(defects, "alice", "dilation result").get<std::vector<double>>();
  r.defect_bob = detail::need_field(defects, "bob", "dilation result").get<std::vector<double>>();
  r.dilated_commutator =
      detail::need_field(j, "dilated_commutator", "dilation result").get<double>();
  if (r.defect_alice.size() != r.dilated_alice.size() ||
      r.defect_bob.size() != r.dilated_bob.size())
    throw ParseError("dilation result: defect lists disagree with operator lists");
  for (const auto* side : {&r.dilated_alice, &r.dilated_bob})
    for (const DilatedOperator& op : *side)
      if (ambient_dim_of(op) != r.ambient_dim)
        throw ParseError("dilation result: operator dimension disagrees with ambient_dim");
  if (r.isometry.target_dim() != r.ambient_dim)
    throw ParseError("dilation result: isometry target disagrees with ambient_dim");
  return r;
}

inline Json bell_problem_to_json(const BellProblem& prob) {
  Json alpha = Json::array();
  for (const Matrix& a : prob.alpha) alpha.push_back(matrix_to_json(a));
  return Json{{"d", prob.d}, {"n", prob.n}, {"alpha", std::move(alpha)}};
}

inline BellProblem bell_problem_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("bell problem: expected an object");
  BellProblem prob;
  prob.d = detail::need_index(j, "d", "bell problem");
  prob.n = detail::need_index(j, "n", "bell problem");
  const Json& alpha = detail::need_field(j, "alpha", "bell problem");
  if (!alpha.is_array() || alpha.size() != static_cast<std::size_t>(prob.d * prob.d))
    throw ParseError("bell problem: alpha must hold d*d blocks");
  for (const Json& a : alpha) prob.alpha.push_back(matrix_from_json(a));
  try {
    validate_bell_problem(prob);
  } catch (const Error& e) {
    throw ParseError(std::string("bell problem: ") + e.what());
  }
  return prob;
}

inline Json seesaw_result_to_json(const SeesawResult& r, bool include_witnesses = true) {
  Json out{{"value", r.value},
           {"measured_eps", r.measured_eps},
           {"converged", r.converged},
           {"best_restart", r.best_restart},
           {"restart_values", r.restart_values}};
  if (include_witnesses) {
    Json wu = Json::array(), wv = Json::array();
    for (const Matrix& w : r.witnesses_u) wu.push_back(matrix_to_json(w));
    for (const Matrix& w : r.witnesses_v) wv.push_back(matrix_to_json(w));
    out["witnesses_u"] = std::move(wu);
    out["witnesses_v"] = std::move(wv);
  }
  return out;
}

inline std::string sweep_to_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "epsilon,value,measured_eps,restart_best,flag\n";
  for (std::size_t e = 0; e < sweep.epsilons.size(); ++e)
    out << detail::format_double(sweep.epsilons[e]) << ',' << detail::format_double(sweep.values[e])
        << ',' << detail::format_double(sweep.measured_eps[e]) << ',' << sweep.best_restart[e]
        << ',' << sweep.flags[e] << '\n';
  return out.str();
}

inline Json sweep_to_json(const SweepResult& sweep) {
  return Json{{"epsilons", sweep.epsilons},
              {"values", sweep.values},
              {"measured_eps", sweep.measured_eps},
              {"restart_best", sweep.best_restart},
              {"flags", sweep.flags}};
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(what + ": malformed JSON");
  return j;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path);
}

inline void save_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write to " + path + " failed");
}

inline void save_json_file(const std::string& path, const Json& j) {
  save_text_file(path, j.dump(2) + "\n");
}

}  // namespace epscomm
