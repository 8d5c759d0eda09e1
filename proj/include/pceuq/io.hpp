#pragma once

#include <json.hpp>

#include <cmath>
#include <initializer_list>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pceuq/basis.hpp"
#include "pceuq/error.hpp"
#include "pceuq/lti.hpp"
#include "pceuq/pce.hpp"
#include "pceuq/qp.hpp"

namespace pceuq::io {

using json = nlohmann::ordered_json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError("missing key '" + std::string(key) + "' in " + where);
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + " must be a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ValidationError(where + " must be an integer");
  return j.get<int>();
}

// ---------------------------------------------------------------------------
// Dense arrays. Unbounded values are written as null.

inline json to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline Eigen::VectorXd vector_from_json(const json& j, const std::string& where, double null_value = std::numeric_limits<double>::quiet_NaN()) {
  if (!j.is_array()) throw ValidationError(where + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null() && !std::isnan(null_value)) {
      v[static_cast<Eigen::Index>(i)] = null_value;
      continue;
    }
    v[static_cast<Eigen::Index>(i)] = number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (double e : v) a.push_back(to_json(e));
  return a;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + " must be an array of rows");
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ValidationError(where + " rows must be arrays of equal length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

inline json to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(std::move(row));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Germs and bases

inline json to_json(const Family& f) {
  switch (f.kind) {
    case Family::Kind::HermiteProbabilists:
      return {{"type", "hermite"}};
    case Family::Kind::Legendre:
      return {{"type", "legendre"}};
    case Family::Kind::Jacobi:
      return {{"type", "jacobi"}, {"a", f.a}, {"b", f.b}};
  }
  return {};
}

inline Family family_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  const json& t = require(j, "type", where);
  if (!t.is_string()) throw ValidationError(where + ".type must be a string");
  const std::string type = t.get<std::string>();
  if (type == "hermite" || type == "legendre") {
    check_keys(j, {"type"}, where);
    return type == "hermite" ? Family::hermite() : Family::legendre();
  }
  if (type == "jacobi") {
    check_keys(j, {"type", "a", "b"}, where);
    return Family::jacobi(number(require(j, "a", where), where + ".a"), number(require(j, "b", where), where + ".b"));
  }
  if (type == "beta") {
    check_keys(j, {"type", "alpha", "beta"}, where);
    const double a = number(require(j, "alpha", where), where + ".alpha");
    const double b = number(require(j, "beta", where), where + ".beta");
    if (!(a > 0.0 && b > 0.0)) throw ValidationError(where + ": Beta shape parameters must be positive");
    return Family::beta(a, b);
  }
  throw ValidationError(where + ".type '" + type + "' is not one of hermite, legendre, jacobi, beta");
}

inline json to_json(const GermSpec& g) {
  json fam = json::array(), sup = json::array();
  for (std::size_t i = 0; i < g.n_xi(); ++i) {
    fam.push_back(to_json(g.family(i)));
    const Interval& s = g.support(i);
    if (std::isfinite(s.lo) && std::isfinite(s.hi))
      sup.push_back(json::array({s.lo, s.hi}));
    else
      sup.push_back(nullptr);
  }
  return {{"families", fam}, {"supports", sup}};
}

inline GermSpec germ_from_json(const json& j, const std::string& where = "germ") {
  check_keys(j, {"families", "supports"}, where);
  const json& fj = require(j, "families", where);
  if (!fj.is_array() || fj.empty()) throw ValidationError(where + ".families must be a non-empty array");
  std::vector<Family> fams;
  for (std::size_t i = 0; i < fj.size(); ++i) fams.push_back(family_from_json(fj[i], where + ".families[" + std::to_string(i) + "]"));
  if (!j.contains("supports")) return GermSpec(fams);
  const json& sj = j.at("supports");
  if (!sj.is_array() || sj.size() != fams.size()) throw ValidationError(where + ".supports must have one entry per family");
  std::vector<Interval> sup;
  for (std::size_t i = 0; i < sj.size(); ++i) {
    const std::string w = where + ".supports[" + std::to_string(i) + "]";
    if (sj[i].is_null()) {
      sup.push_back(fams[i].bounded() ? Interval{-1.0, 1.0} : Interval{});
    } else {
      if (!sj[i].is_array() || sj[i].size() != 2) throw ValidationError(w + " must be [lo, hi] or null");
      sup.push_back({number(sj[i][0], w + "[0]"), number(sj[i][1], w + "[1]")});
    }
  }
  return GermSpec(fams, sup);
}

inline json basis_ref(const BasisSpec& b) { return {{"germ", to_json(b.germ())}, {"degree", b.max_degree()}}; }

/// Builds each distinct (germ, degree) once, so PCEs that name the same basis share it.
class BasisCache {
 public:
  BasisPtr get(const json& ref, const std::string& where = "basis_ref") {
    check_keys(ref, {"germ", "degree"}, where);
    const GermSpec germ = germ_from_json(require(ref, "germ", where), where + ".germ");
    const int d = integer(require(ref, "degree", where), where + ".degree");
    if (d < 0) throw ValidationError(where + ".degree must be non-negative");
    const std::string key = json{{"germ", to_json(germ)}, {"degree", d}}.dump();
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    BasisPtr b = build_basis(germ, d);
    cache_.emplace(key, b);
    return b;
  }

 private:
  std::map<std::string, BasisPtr> cache_;
};

// ---------------------------------------------------------------------------
// PCE vectors

inline json to_json(const PceVector& p) {
  json c = json::array();
  for (double v : p.coeffs()) c.push_back(v);
  return {{"basis_ref", basis_ref(*p.basis())}, {"coeffs", c}};
}

inline PceVector coeffs_on(const BasisPtr& basis, const json& j, const std::string& where) {
  if (j.is_number()) return PceVector::constant(basis, j.get<double>());
  Eigen::VectorXd c = vector_from_json(j, where);
  if (c.size() > static_cast<Eigen::Index>(basis->size()))
    throw ValidationError(where + " has more coefficients than the basis has elements");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  full.head(c.size()) = c;
  return PceVector(basis, std::move(full));
}

inline PceVector pce_from_json(const json& j, BasisCache& cache, const std::string& where = "pce") {
  check_keys(j, {"basis_ref", "coeffs"}, where);
  const BasisPtr b = cache.get(require(j, "basis_ref", where), where + ".basis_ref");
  const json& c = require(j, "coeffs", where);
  if (!c.is_array() || c.size() != b->size())
    throw ValidationError(where + ".coeffs must have exactly " + std::to_string(b->size()) + " entries");
  return coeffs_on(b, c, where + ".coeffs");
}

/// Entries of `j` as PCEs over `basis`: each entry is a number (constant) or a
/// coefficient array, zero-padded to the basis size.
inline std::vector<PceVector> pce_list(const BasisPtr& basis, const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + " must be an array");
  std::vector<PceVector> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(coeffs_on(basis, j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline json coeff_list(const std::vector<PceVector>& v) {
  json a = json::array();
  for (const auto& p : v) a.push_back(to_json(Eigen::VectorXd(p.coeffs())));
  return a;
}

// ---------------------------------------------------------------------------
// Polynomial maps: {"inputs": n, "terms": [{"coeff": c, "exponents": [..]}]}

inline PolynomialMap polynomial_map_from_json(const json& j, const std::string& where = "map") {
  check_keys(j, {"inputs", "terms"}, where);
  const int n = integer(require(j, "inputs", where), where + ".inputs");
  if (n < 1) throw ValidationError(where + ".inputs must be positive");
  const json& tj = require(j, "terms", where);
  if (!tj.is_array()) throw ValidationError(where + ".terms must be an array");
  PolynomialMap f;
  f.n_inputs = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i < tj.size(); ++i) {
    const std::string w = where + ".terms[" + std::to_string(i) + "]";
    check_keys(tj[i], {"coeff", "exponents"}, w);
    PolynomialMap::Term t;
    t.coeff = number(require(tj[i], "coeff", w), w + ".coeff");
    const json& ej = require(tj[i], "exponents", w);
    if (!ej.is_array()) throw ValidationError(w + ".exponents must be an array");
    for (std::size_t k = 0; k < ej.size(); ++k) {
      const int e = integer(ej[k], w + ".exponents[" + std::to_string(k) + "]");
      if (e < 0) throw ValidationError(w + ".exponents must be non-negative");
      t.exponents.push_back(e);
    }
    f.terms.push_back(std::move(t));
  }
  f.validate();
  return f;
}

inline json to_json(const PolynomialMap& f) {
  json terms = json::array();
  for (const auto& t : f.terms) terms.push_back({{"coeff", t.coeff}, {"exponents", t.exponents}});
  return {{"inputs", f.n_inputs}, {"terms", terms}};
}

// ---------------------------------------------------------------------------
// QP: {"basis_ref", "H", "A", "h": [..], "b": [..]}

inline QpProblem qp_from_json(const json& j, BasisCache& cache, const std::string& where = "qp") {
  check_keys(j, {"basis_ref", "H", "A", "h", "b"}, where);
  const BasisPtr basis = cache.get(require(j, "basis_ref", where), where + ".basis_ref");
  Eigen::MatrixXd H = matrix_from_json(require(j, "H", where), where + ".H");
  Eigen::MatrixXd A = matrix_from_json(require(j, "A", where), where + ".A");
  if (A.size() == 0) A.resize(0, H.cols());
  return QpProblem(std::move(H), std::move(A), pce_list(basis, require(j, "h", where), where + ".h"),
                   pce_list(basis, require(j, "b", where), where + ".b"));
}

inline json to_json(const QpProblem& qp) {
  return {{"basis_ref", basis_ref(*qp.basis())},
          {"H", to_json(qp.H())},
          {"A", to_json(qp.A())},
          {"h", coeff_list(qp.h())},
          {"b", coeff_list(qp.b())}};
}

// ---------------------------------------------------------------------------
// LTI systems: {"A0", "A1", "B", "discrete", "dt"}

inline LtiSystem lti_from_json(const json& j, const std::string& where = "system") {
  check_keys(j, {"A0", "A1", "B", "discrete", "dt"}, where);
  LtiSystem s;
  s.A0 = matrix_from_json(require(j, "A0", where), where + ".A0");
  if (j.contains("A1")) s.A1 = matrix_from_json(j.at("A1"), where + ".A1");
  s.B = matrix_from_json(require(j, "B", where), where + ".B");
  if (j.contains("discrete")) {
    if (!j.at("discrete").is_boolean()) throw ValidationError(where + ".discrete must be a boolean");
    s.discrete = j.at("discrete").get<bool>();
  }
  if (j.contains("dt")) s.dt = number(j.at("dt"), where + ".dt");
  s.validate();
  return s;
}

inline json to_json(const LtiSystem& s) {
  json j = {{"A0", to_json(s.A0)}};
  if (s.A1.size() > 0) j["A1"] = to_json(s.A1);
  j["B"] = to_json(s.B);
  j["discrete"] = s.discrete;
  if (s.discrete) j["dt"] = s.dt;
  return j;
}

// MPC: {"system", "horizon", "Q", "R", "P", "x_lo", "x_hi", "u_lo", "u_hi",
//       "basis_ref", "x0": [..]}. Bound entries may be null for "unbounded".
inline MpcSpec mpc_from_json(const json& j, BasisCache& cache, const std::string& where = "mpc") {
  check_keys(j, {"system", "horizon", "Q", "R", "P", "x_lo", "x_hi", "u_lo", "u_hi", "basis_ref", "x0"}, where);
  MpcSpec s;
  s.system = lti_from_json(require(j, "system", where), where + ".system");
  s.horizon = integer(require(j, "horizon", where), where + ".horizon");
  s.Q = matrix_from_json(require(j, "Q", where), where + ".Q");
  s.R = matrix_from_json(require(j, "R", where), where + ".R");
  if (j.contains("P")) s.P = matrix_from_json(j.at("P"), where + ".P");
  const double inf = std::numeric_limits<double>::infinity();
  if (j.contains("x_lo")) s.x_lo = vector_from_json(j.at("x_lo"), where + ".x_lo", -inf);
  if (j.contains("x_hi")) s.x_hi = vector_from_json(j.at("x_hi"), where + ".x_hi", inf);
  if (j.contains("u_lo")) s.u_lo = vector_from_json(j.at("u_lo"), where + ".u_lo", -inf);
  if (j.contains("u_hi")) s.u_hi = vector_from_json(j.at("u_hi"), where + ".u_hi", inf);
  const BasisPtr basis = cache.get(require(j, "basis_ref", where), where + ".basis_ref");
  s.x0 = pce_list(basis, require(j, "x0", where), where + ".x0");
  validate(s);
  return s;
}

inline json to_json(const MpcSpec& s) {
  json j = {{"system", to_json(s.system)}, {"horizon", s.horizon}, {"Q", to_json(s.Q)}, {"R", to_json(s.R)}};
  if (s.P.size() > 0) j["P"] = to_json(s.P);
  if (s.x_lo.size() > 0) j["x_lo"] = to_json(s.x_lo);
  if (s.x_hi.size() > 0) j["x_hi"] = to_json(s.x_hi);
  if (s.u_lo.size() > 0) j["u_lo"] = to_json(s.u_lo);
  if (s.u_hi.size() > 0) j["u_hi"] = to_json(s.u_hi);
  j["basis_ref"] = basis_ref(*s.x0.front().basis());
  j["x0"] = coeff_list(s.x0);
  return j;
}

}  // namespace pceuq::io
