#pragma once

#include <coupled_splitting/errors.hpp>
#include <coupled_splitting/linalg.hpp>
#include <coupled_splitting/model.hpp>
#include <coupled_splitting/prox.hpp>
#include <coupled_splitting/rp.hpp>
#include <coupled_splitting/solver.hpp>
#include <coupled_splitting/spectral.hpp>

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace coupled_splitting::io {

using json = nlohmann::json;

/// Shortest decimal string that parses back to the same double; empty for NaN.
inline std::string format_double(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline double number(const json& j, const std::string& field) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw StructuralError(field, "expected a number");
}

/// Bound entries: null means unbounded in the given direction.
inline double bound(const json& j, const std::string& field, double if_null) {
  return j.is_null() ? if_null : number(j, field);
}

inline json encode_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Vector vector_from(const json& j, const std::string& field) {
  if (!j.is_array()) throw StructuralError(field, "expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], field);
  return v;
}

/// Accepts an array of rows or a flat row-major array of rows * cols entries.
inline Matrix matrix_from(const json& j, Index rows, Index cols, const std::string& field) {
  if (!j.is_array()) throw StructuralError(field, "expected an array");
  Matrix M(rows, cols);
  if (!j.empty() && j[0].is_array()) {
    if (static_cast<Index>(j.size()) != rows) throw StructuralError(field, "expected " + std::to_string(rows) + " rows");
    for (Index r = 0; r < rows; ++r) {
      const json& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Index>(row.size()) != cols)
        throw StructuralError(field, "expected " + std::to_string(cols) + " columns");
      for (Index c = 0; c < cols; ++c) M(r, c) = number(row[static_cast<std::size_t>(c)], field);
    }
    return M;
  }
  if (static_cast<Index>(j.size()) != rows * cols)
    throw StructuralError(field, "expected " + std::to_string(rows * cols) + " entries");
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) M(r, c) = number(j[static_cast<std::size_t>(r * cols + c)], field);
  return M;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(encode_number(v(i)));
  return a;
}

inline json to_json(const Matrix& M) {
  json a = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(encode_number(M(r, c)));
    a.push_back(std::move(row));
  }
  return a;
}

inline ProxFn prox_from(const json& j, Index dim, const std::string& where) {
  if (!j.is_object() || !j.contains("kind")) throw StructuralError(where + ".kind", "missing");
  const ProxKind kind = prox_kind_from_string(j.at("kind").get<std::string>());
  const json params = j.value("params", json::object());
  ProxFn f;
  switch (kind) {
    case ProxKind::zero: break;
    case ProxKind::l1: f = ProxFn::l1(number(params.value("lambda", json(1.0)), where + ".params.lambda")); break;
    case ProxKind::box: {
      const double inf = std::numeric_limits<double>::infinity();
      Vector lo = Vector::Constant(dim, -inf), hi = Vector::Constant(dim, inf);
      auto read = [&](const char* key, Vector& out, double if_null) {
        if (!params.contains(key)) return;
        const json& a = params.at(key);
        const std::string field = where + ".params." + key;
        if (!a.is_array()) {
          out.setConstant(bound(a, field, if_null));
          return;
        }
        if (static_cast<Index>(a.size()) != dim) throw StructuralError(field, "wrong length");
        for (Index i = 0; i < dim; ++i) out(i) = bound(a[static_cast<std::size_t>(i)], field, if_null);
      };
      read("lower", lo, -inf);
      read("upper", hi, inf);
      f = ProxFn::box(lo, hi);
      break;
    }
    case ProxKind::quadratic: {
      Matrix P = params.contains("P") ? matrix_from(params.at("P"), dim, dim, where + ".params.P")
                                      : Matrix(Matrix::Zero(dim, dim));
      Vector q = params.contains("q") ? vector_from(params.at("q"), where + ".params.q") : Vector(Vector::Zero(dim));
      f = ProxFn::quadratic(P, q);
      break;
    }
    case ProxKind::opaque: {
      if (!params.contains("inner")) throw StructuralError(where + ".params.inner", "opaque term needs an inner term");
      f = ProxFn::opaque(prox_from(params.at("inner"), dim, where + ".params.inner"));
      break;
    }
  }
  if (j.contains("sigma") && !j.at("sigma").is_null()) f.sigma = matrix_from(j.at("sigma"), dim, dim, where + ".sigma");
  if (kind == ProxKind::opaque && f.inner && f.sigma.size() == 0) f.sigma = f.inner->sigma;
  return f;
}

inline json prox_to_json(const ProxFn& f) {
  json j;
  j["kind"] = std::string(to_string(f.kind));
  json params = json::object();
  switch (f.kind) {
    case ProxKind::zero: break;
    case ProxKind::l1: params["lambda"] = f.lambda; break;
    case ProxKind::box:
      params["lower"] = to_json(f.lower);
      params["upper"] = to_json(f.upper);
      break;
    case ProxKind::quadratic:
      params["P"] = to_json(f.P);
      params["q"] = to_json(f.q);
      break;
    case ProxKind::opaque:
      if (!f.inner) throw UnsupportedError("cannot serialize an opaque term given by a callable");
      params["inner"] = prox_to_json(*f.inner);
      break;
  }
  j["params"] = std::move(params);
  j["sigma"] = f.sigma.size() ? to_json(f.sigma) : json(nullptr);
  return j;
}

}  // namespace detail

/// Parses and validates an instance document.
inline ProblemInstance instance_from_json(const json& j) {
  if (!j.is_object()) throw StructuralError("instance", "expected an object");
  for (const char* key : {"blocks", "H"})
    if (!j.contains(key)) throw StructuralError(key, "missing");
  std::vector<Index> dims;
  for (const auto& e : j.at("blocks")) {
    if (!e.is_number_integer()) throw StructuralError("blocks", "expected integers");
    dims.push_back(e.get<Index>());
  }
  const Vector b = j.contains("b") ? detail::vector_from(j.at("b"), "b") : Vector();
  ProblemInstance inst;
  inst.blocks = BlockStructure(dims, b.size());
  const Index d = inst.blocks.d(), m = b.size();
  inst.H = detail::matrix_from(j.at("H"), d, d, "H");
  inst.g = j.contains("g") ? detail::vector_from(j.at("g"), "g") : Vector(Vector::Zero(d));
  inst.A = m ? detail::matrix_from(j.value("A", json::array()), m, d, "A") : Matrix(0, d);
  inst.b = b;
  if (j.contains("theta")) {
    const json& th = j.at("theta");
    if (!th.is_array() || static_cast<Index>(th.size()) != inst.n())
      throw StructuralError("theta", "expected " + std::to_string(inst.n()) + " terms");
    for (Index i = 0; i < inst.n(); ++i)
      inst.theta.push_back(
          detail::prox_from(th[static_cast<std::size_t>(i)], inst.blocks.dim(i), "theta[" + std::to_string(i) + "]"));
  } else {
    inst.theta.assign(static_cast<std::size_t>(inst.n()), ProxFn::zero());
  }
  validate_instance(inst);
  return inst;
}

inline json instance_to_json(const ProblemInstance& inst) {
  json j;
  j["blocks"] = inst.blocks.dims();
  j["H"] = detail::to_json(inst.H);
  j["g"] = detail::to_json(inst.g);
  j["A"] = detail::to_json(inst.A);
  j["b"] = detail::to_json(inst.b);
  json th = json::array();
  for (const auto& t : inst.theta) th.push_back(detail::prox_to_json(t));
  j["theta"] = std::move(th);
  return j;
}

inline json parse_document(std::istream& in, const std::string& origin) {
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw StructuralError(origin, std::string("malformed JSON: ") + e.what());
  }
}

inline ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError(path, "cannot open instance file");
  try {
    return instance_from_json(parse_document(in, path));
  } catch (const json::exception& e) {
    throw StructuralError(path, e.what());
  }
}

inline void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << instance_to_json(inst).dump(2) << '\n';
}

/// Key/value pairs echoed into output headers.
using Header = std::vector<std::pair<std::string, std::string>>;

inline void write_header(std::ostream& os, const Header& header) {
  if (header.empty()) return;
  os << '#';
  for (const auto& [k, v] : header) os << ' ' << k << '=' << v;
  os << '\n';
}

namespace detail {
inline void write_record(std::ostream& os, const TraceRecord& r) {
  os << r.k;
  for (double v : r.r_dual) os << ',' << format_double(v);
  os << ',' << format_double(r.r_feas) << ',' << format_double(r.surrogate) << ',' << format_double(r.objective)
     << ',' << format_double(r.lyapunov);
}

inline void write_trace_columns(std::ostream& os, Index n, bool with_trial) {
  if (with_trial) os << "trial,";
  os << 'k';
  for (Index i = 1; i <= n; ++i) os << ",r_dual_" << i;
  os << ",r_feas,surrogate,objective,lyapunov\n";
}
}  // namespace detail

/// k,r_dual_1..r_dual_n,r_feas,surrogate,objective,lyapunov plus a status comment row.
inline void write_trace_csv(std::ostream& os, const Trace& t, Index n, const Header& header = {}) {
  write_header(os, header);
  detail::write_trace_columns(os, n, false);
  for (const auto& r : t.records) {
    detail::write_record(os, r);
    os << '\n';
  }
  for (const auto& w : t.warnings) os << "# warning=" << w << '\n';
  os << "# status=" << to_string(t.status) << '\n';
}

/// Multi-trial trace with a leading trial column; one status row per trial.
inline void write_rp_trace_csv(std::ostream& os, const std::vector<Trace>& traces, Index n,
                               const Header& header = {}) {
  write_header(os, header);
  detail::write_trace_columns(os, n, true);
  for (std::size_t t = 0; t < traces.size(); ++t)
    for (const auto& r : traces[t].records) {
      os << t << ',';
      detail::write_record(os, r);
      os << '\n';
    }
  for (std::size_t t = 0; t < traces.size(); ++t)
    os << "# trial=" << t << " status=" << to_string(traces[t].status) << '\n';
}

/// k,Ex_1..Ex_d,Emu_1..Emu_m,mode.
inline void write_expectation_csv(std::ostream& os, const ExpectationTrace& E, const Header& header = {}) {
  write_header(os, header);
  const Index d = E.Ex.empty() ? 0 : E.Ex.front().size();
  const Index m = E.Emu.empty() ? 0 : E.Emu.front().size();
  os << 'k';
  for (Index i = 1; i <= d; ++i) os << ",Ex_" << i;
  for (Index i = 1; i <= m; ++i) os << ",Emu_" << i;
  os << ",mode\n";
  const std::string_view mode = to_string(E.mode);
  for (std::size_t k = 0; k < E.Ex.size(); ++k) {
    os << k;
    for (Index i = 0; i < d; ++i) os << ',' << format_double(E.Ex[k](i));
    for (Index i = 0; i < m; ++i) os << ',' << format_double(E.Emu[k](i));
    os << ',' << mode << '\n';
  }
}

/// Named verdicts in report documents.
inline constexpr const char* kVerdictNames[] = {"lemma_3_1", "lemma_3_3", "lemma_3_4", "lemma_3_5", "prop_3_1"};

namespace detail {
inline std::optional<bool>* verdict_slot(SpectralVerdicts& v, std::string_view name) {
  if (name == "lemma_3_1") return &v.qs_spectrum;
  if (name == "lemma_3_3") return &v.rank_identity;
  if (name == "lemma_3_4") return &v.unit_circle;
  if (name == "lemma_3_5") return &v.semisimple_one;
  if (name == "prop_3_1") return &v.bcd_rate_order;
  return nullptr;
}

inline Matrix matrix_any(const json& j, const std::string& field) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
  return matrix_from(j, rows, cols, field);
}
}  // namespace detail

inline json report_to_json(const SpectralReport& r) {
  json j;
  j["n"] = r.n;
  j["d"] = r.d;
  j["m"] = r.m;
  j["beta"] = r.beta;
  j["S"] = detail::to_json(r.S);
  j["Q"] = detail::to_json(r.Q);
  j["M"] = detail::to_json(r.M);
  j["Qbar"] = detail::to_json(r.Qbar);
  j["bbar"] = detail::to_json(r.bbar);
  j["consistency_defect"] = detail::encode_number(r.consistency_defect);
  j["eig_QS"] = detail::to_json(r.eig_QS);
  json em = json::array();
  for (Index i = 0; i < r.eig_M.size(); ++i)
    em.push_back(json::array({detail::encode_number(r.eig_M(i).real()), detail::encode_number(r.eig_M(i).imag())}));
  j["eig_M"] = std::move(em);
  j["rho_M"] = detail::encode_number(r.rho_M);
  j["rank_S"] = r.rank_S;
  j["rank_AtA"] = r.rank_AtA;
  j["rank_kkt"] = r.rank_kkt;
  j["am_one"] = r.am_one;
  j["gm_one"] = r.gm_one;
  j["am_one_counted"] = r.am_one_counted;
  json v = json::object();
  SpectralVerdicts copy = r.verdicts;
  for (const char* name : kVerdictNames) {
    const auto* slot = detail::verdict_slot(copy, name);
    v[name] = slot->has_value() ? json(**slot) : json(nullptr);
  }
  j["verdicts"] = std::move(v);
  return j;
}

inline SpectralReport report_from_json(const json& j) {
  try {
    SpectralReport r;
    r.n = j.at("n").get<Index>();
    r.d = j.at("d").get<Index>();
    r.m = j.at("m").get<Index>();
    r.beta = detail::number(j.at("beta"), "beta");
    r.S = detail::matrix_any(j.at("S"), "S");
    r.Q = detail::matrix_any(j.at("Q"), "Q");
    r.M = detail::matrix_any(j.at("M"), "M");
    r.Qbar = detail::matrix_any(j.at("Qbar"), "Qbar");
    r.bbar = detail::vector_from(j.at("bbar"), "bbar");
    r.consistency_defect = detail::number(j.at("consistency_defect"), "consistency_defect");
    r.eig_QS = detail::vector_from(j.at("eig_QS"), "eig_QS");
    const json& em = j.at("eig_M");
    r.eig_M.resize(static_cast<Index>(em.size()));
    for (std::size_t i = 0; i < em.size(); ++i)
      r.eig_M(static_cast<Index>(i)) = {detail::number(em[i].at(0), "eig_M"), detail::number(em[i].at(1), "eig_M")};
    r.rho_M = detail::number(j.at("rho_M"), "rho_M");
    r.rank_S = j.at("rank_S").get<Index>();
    r.rank_AtA = j.at("rank_AtA").get<Index>();
    r.rank_kkt = j.at("rank_kkt").get<Index>();
    r.am_one = j.at("am_one").get<Index>();
    r.gm_one = j.at("gm_one").get<Index>();
    r.am_one_counted = j.at("am_one_counted").get<Index>();
    for (const auto& [name, val] : j.at("verdicts").items()) {
      auto* slot = detail::verdict_slot(r.verdicts, name);
      if (!slot) throw StructuralError("verdicts", "unknown verdict '" + name + "'");
      if (!val.is_null()) *slot = val.get<bool>();
    }
    return r;
  } catch (const json::exception& e) {
    throw StructuralError("report", e.what());
  }
}

/// Field-by-field equality of two reports (NaN equals NaN).
inline bool same_report(const SpectralReport& a, const SpectralReport& b) {
  auto eq = [](const auto& x, const auto& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    for (Index i = 0; i < x.size(); ++i) {
      const auto u = x.data()[i], v = y.data()[i];
      if (!(u == v) && !(u != u && v != v)) return false;
    }
    return true;
  };
  auto same_num = [](double u, double v) { return u == v || (std::isnan(u) && std::isnan(v)); };
  return a.n == b.n && a.d == b.d && a.m == b.m && a.beta == b.beta && eq(a.S, b.S) && eq(a.Q, b.Q) &&
         eq(a.M, b.M) && eq(a.Qbar, b.Qbar) && eq(a.bbar, b.bbar) &&
         same_num(a.consistency_defect, b.consistency_defect) && eq(a.eig_QS, b.eig_QS) && eq(a.eig_M, b.eig_M) &&
         same_num(a.rho_M, b.rho_M) && a.rank_S == b.rank_S && a.rank_AtA == b.rank_AtA &&
         a.rank_kkt == b.rank_kkt && a.am_one == b.am_one && a.gm_one == b.gm_one &&
         a.am_one_counted == b.am_one_counted && a.verdicts == b.verdicts;
}

}  // namespace coupled_splitting::io
