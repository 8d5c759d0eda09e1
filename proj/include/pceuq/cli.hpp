#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pceuq/io.hpp"
#include "pceuq/lti.hpp"
#include "pceuq/numfmt.hpp"
#include "pceuq/pce.hpp"
#include "pceuq/polynomial.hpp"
#include "pceuq/qp.hpp"

namespace pceuq::cli {

using io::json;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"project", "error-poly", "error-nonpoly", "augustin",
                                             "qp-propagate", "mpc-demo", "ltierr-demo", "table1"};
  return c;
}

struct RunConfig {
  std::string command;
  std::string input_path;   // empty: built-in default where the command has one
  std::string output_path;  // empty: CSV to the output stream, no manifest
  std::map<std::string, double> overrides;  // degree, n, quad-points, tolerance, dz, z0
  std::vector<double> z;                    // table1 coefficients z_1..z_dz
};

enum ExitCode : int { kOk = 0, kInternal = 1, kValidation = 2, kNumerical = 3 };

namespace detail {

inline std::optional<double> override_value(const RunConfig& c, const std::string& key) {
  auto it = c.overrides.find(key);
  if (it == c.overrides.end()) return std::nullopt;
  return it->second;
}

inline std::optional<int> override_int(const RunConfig& c, const std::string& key) {
  const auto v = override_value(c, key);
  if (!v) return std::nullopt;
  if (*v != std::floor(*v) || std::abs(*v) > 1e9) throw ValidationError("--" + key + " must be an integer");
  return static_cast<int>(*v);
}

inline QuadraturePolicy policy(const RunConfig& c) {
  QuadraturePolicy p;
  if (auto t = override_value(c, "tolerance")) {
    if (!(*t > 0.0)) throw ValidationError("--tolerance must be positive");
    p.tolerance = *t;
  }
  if (auto m = override_int(c, "quad-points")) {
    if (*m < 1) throw ValidationError("--quad-points must be positive");
    p.initial_points = *m;
  }
  return p;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("input is not valid JSON: " + std::string(e.what()));
  }
}

/// CSV with a mandatory header and shortest round-trip doubles.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) { line(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) throw std::logic_error("CSV row width mismatch");
    line(cells);
  }
  std::string str() const { return out_.str(); }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  std::size_t cols_;
  std::ostringstream out_;
};

inline std::string num(double v) { return format_double(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }

// A scalar function of the physical germ coordinates:
//   {"type": "constant", "value": c}
//   {"type": "polynomial", "terms": [{"coeff": c, "exponents": [..]}]}
//   {"type": "exp", "coeff": c, "rates": [a_1, ..]}     c * exp(sum_i a_i x_i)
struct ScalarFunction {
  enum class Kind { Constant, Polynomial, Exp };
  Kind kind = Kind::Constant;
  double value = 0.0;
  PolynomialMap poly;
  double coeff = 1.0;
  std::vector<double> rates;

  double operator()(std::span<const double> x) const {
    switch (kind) {
      case Kind::Constant:
        return value;
      case Kind::Polynomial:
        return poly(x);
      case Kind::Exp: {
        double s = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i) s += rates[i] * x[i];
        return coeff * std::exp(s);
      }
    }
    return 0.0;
  }

  std::optional<int> polynomial_degree() const {
    if (kind == Kind::Constant) return 0;
    if (kind == Kind::Polynomial) return poly.degree();
    return std::nullopt;
  }

  /// k-th derivative for a scalar argument.
  double derivative(int k, double x) const {
    switch (kind) {
      case Kind::Constant:
        return k == 0 ? value : 0.0;
      case Kind::Polynomial: {
        std::vector<double> c(static_cast<std::size_t>(poly.degree()) + 1, 0.0);
        for (const auto& t : poly.terms) c[static_cast<std::size_t>(t.exponents[0])] += t.coeff;
        return Polynomial1d(c).derivative(k)(x);
      }
      case Kind::Exp:
        return coeff * std::pow(rates[0], k) * std::exp(rates[0] * x);
    }
    return 0.0;
  }

  static ScalarFunction from_json(const json& j, std::size_t n_xi, const std::string& where = "function") {
    if (!j.is_object()) throw ValidationError(where + " must be an object");
    const json& t = io::require(j, "type", where);
    if (!t.is_string()) throw ValidationError(where + ".type must be a string");
    const std::string type = t.get<std::string>();
    ScalarFunction f;
    if (type == "constant") {
      io::check_keys(j, {"type", "value"}, where);
      f.kind = Kind::Constant;
      f.value = io::number(io::require(j, "value", where), where + ".value");
    } else if (type == "polynomial") {
      io::check_keys(j, {"type", "terms"}, where);
      f.kind = Kind::Polynomial;
      json m = {{"inputs", n_xi}, {"terms", io::require(j, "terms", where)}};
      f.poly = io::polynomial_map_from_json(m, where);
    } else if (type == "exp") {
      io::check_keys(j, {"type", "coeff", "rates"}, where);
      f.kind = Kind::Exp;
      if (j.contains("coeff")) f.coeff = io::number(j.at("coeff"), where + ".coeff");
      f.rates.assign(n_xi, 1.0);
      if (j.contains("rates")) {
        const Eigen::VectorXd r = io::vector_from_json(j.at("rates"), where + ".rates");
        if (static_cast<std::size_t>(r.size()) != n_xi) throw ValidationError(where + ".rates must have one entry per germ dimension");
        for (std::size_t i = 0; i < n_xi; ++i) f.rates[i] = r[static_cast<Eigen::Index>(i)];
      }
    } else {
      throw ValidationError(where + ".type '" + type + "' is not one of constant, polynomial, exp");
    }
    return f;
  }
};

// {"germ": .., "degree": d, "function": ..}
struct FunctionInput {
  BasisPtr basis;
  ScalarFunction fn;
};

inline FunctionInput function_input(const RunConfig& c, std::initializer_list<const char*> extra = {}) {
  const json j = read_json(c.input_path);
  std::vector<const char*> keys = {"germ", "degree", "function"};
  keys.insert(keys.end(), extra.begin(), extra.end());
  if (!j.is_object()) throw ValidationError("input must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : keys) ok = ok || key == k;
    if (!ok) throw ValidationError("unknown key '" + key + "' in input");
  }
  const GermSpec germ = io::germ_from_json(io::require(j, "germ", "input"));
  int d = j.contains("degree") ? io::integer(j.at("degree"), "input.degree") : 0;
  if (auto o = override_int(c, "degree")) d = *o;
  if (d < 0) throw ValidationError("degree must be non-negative");
  FunctionInput in{build_basis(germ, d), ScalarFunction::from_json(io::require(j, "function", "input"), germ.n_xi())};
  return in;
}

inline void write_pce_csv(Csv& csv, const PceVector& p, const std::string& label) {
  const auto& idx = p.basis()->indices();
  for (std::size_t j = 0; j < p.size(); ++j) {
    std::string alpha;
    for (std::size_t i = 0; i < idx[j].degrees.size(); ++i) alpha += (i ? ";" : "") + std::to_string(idx[j].degrees[i]);
    std::vector<std::string> cells;
    if (!label.empty()) cells.push_back(label);
    cells.push_back(num(j));
    cells.push_back(alpha);
    cells.push_back(num(p[j]));
    csv.row(cells);
  }
}

struct Result {
  std::string csv;
  json manifest;
};

// ---------------------------------------------------------------------------
// Commands

inline Result cmd_project(const RunConfig& c) {
  const FunctionInput in = function_input(c);
  const QuadraturePolicy pol = policy(c);
  PceVector y;
  json quad;
  if (in.fn.kind == ScalarFunction::Kind::Constant) {
    y = PceVector::constant(in.basis, in.fn.value);
    quad = {{"rule", "none"}};
  } else if (auto m = override_int(c, "quad-points")) {
    y = project(in.fn, in.basis, tensor_rule(in.basis->germ(), *m));
    quad = {{"rule", "gauss-tensor"}, {"points_per_dim", *m}};
  } else if (auto deg = in.fn.polynomial_degree()) {
    const int integrand = *deg + in.basis->max_degree();
    y = project_exact(in.fn, in.basis, integrand);
    quad = {{"rule", "gauss-tensor"}, {"points_per_dim", points_for_degree(integrand)}};
  } else {
    y = project_adaptive(in.fn, in.basis, pol);
    quad = {{"rule", "gauss-tensor-doubling"}, {"tolerance", pol.tolerance}};
  }
  Csv csv({"j", "multi_index", "coeff"});
  write_pce_csv(csv, y, "");
  return {csv.str(), {{"quadrature", quad}, {"result", io::to_json(y)}}};
}

inline std::string error_flag(const TruncationError& e) { return e.bound ? "bound" : "exact"; }

// {"basis_ref": .., "inputs": [coeffs..], "map": {"inputs": k, "terms": [..]}}
inline Result cmd_error_poly(const RunConfig& c) {
  const json j = read_json(c.input_path);
  io::check_keys(j, {"basis_ref", "inputs", "map"}, "input");
  io::BasisCache cache;
  const BasisPtr basis = cache.get(io::require(j, "basis_ref", "input"), "input.basis_ref");
  const std::vector<PceVector> inputs = io::pce_list(basis, io::require(j, "inputs", "input"), "input.inputs");
  const PolynomialMap f = io::polynomial_map_from_json(io::require(j, "map", "input"), "input.map");
  if (f.n_inputs != inputs.size()) throw ValidationError("map.inputs must equal the number of input PCEs");
  const PceVector y = galerkin_compose(f, inputs);

  std::vector<std::size_t> ns;
  if (auto n = override_int(c, "n")) {
    if (*n < 0) throw ValidationError("--n must be non-negative");
    ns.push_back(static_cast<std::size_t>(*n));
  } else if (auto d = override_int(c, "degree")) {
    if (*d < 0) throw ValidationError("--degree must be non-negative");
    ns.push_back(y.basis()->prefix_length(*d) - 1);
  } else {
    for (std::size_t n = 0; n < y.size(); ++n) ns.push_back(n);
  }
  Csv csv({"n", "value", "flag"});
  for (std::size_t n : ns) {
    const TruncationError e = truncation_error_poly(y, n);
    csv.row({num(n), num(e.value), error_flag(e)});
  }
  return {csv.str(), {{"output_pce", io::to_json(y)}, {"output_degree", y.basis()->max_degree()}}};
}

inline Result cmd_error_nonpoly(const RunConfig& c) {
  FunctionInput in = function_input(c);
  if (auto n = override_int(c, "n")) {
    if (in.basis->n_xi() != 1) throw ValidationError("--n needs a univariate germ; use --degree");
    if (*n < 0) throw ValidationError("--n must be non-negative");
    in.basis = build_basis(in.basis->germ(), *n);
  }
  const QuadraturePolicy pol = policy(c);
  Csv csv({"n", "value", "flag"});
  json points = json::array();
  for (int d = 0; d <= in.basis->max_degree(); ++d) {
    const BasisPtr b = d == in.basis->max_degree() ? in.basis : build_basis(in.basis->germ(), d);
    const TruncationError e = truncation_error_nonpoly(in.fn, *b, pol);
    csv.row({num(b->size() - 1), num(e.value), "quadrature"});
    points.push_back({{"n", b->size() - 1}, {"points_per_dim", e.points_per_dim}, {"warnings", e.warnings}});
  }
  return {csv.str(), {{"quadrature", {{"rule", "gauss-tensor-doubling"}, {"tolerance", pol.tolerance}, {"evaluations", points}}}}};
}

// {"germ": 1-D Hermite, "function": .., "k": k}
inline Result cmd_augustin(const RunConfig& c) {
  FunctionInput in = function_input(c, {"k"});
  const json j = read_json(c.input_path);
  const int k = io::integer(io::require(j, "k", "input"), "input.k");
  std::vector<std::size_t> ns;
  if (auto n = override_int(c, "n")) {
    if (*n < 0) throw ValidationError("--n must be non-negative");
    ns.push_back(static_cast<std::size_t>(*n));
  } else {
    for (int n = std::max(0, k - 1); n <= in.basis->max_degree(); ++n) ns.push_back(static_cast<std::size_t>(n));
  }
  const QuadraturePolicy pol = policy(c);
  Csv csv({"n", "value", "flag"});
  for (std::size_t n : ns) {
    const TruncationError e = augustin_bound(
        [&](std::span<const double> x) { return in.fn.derivative(k, x[0]); }, in.basis->germ(), k, n, pol);
    csv.row({num(n), num(e.value), error_flag(e)});
  }
  return {csv.str(), {{"k", k}}};
}

inline Result cmd_qp_propagate(const RunConfig& c) {
  io::BasisCache cache;
  const QpProblem qp = io::qp_from_json(read_json(c.input_path), cache, "input");
  const Propagation p = propagate(qp);
  Csv csv({"variable", "j", "multi_index", "coeff"});
  for (std::size_t i = 0; i < p.y.size(); ++i) write_pce_csv(csv, p.y[i], std::to_string(i));
  json m = {{"constant_active", p.constant_active},
            {"active", p.active.indices},
            {"weakly_active", p.weakly_active},
            {"probes", p.probes.rows()},
            {"y", json::array()}};
  for (const auto& y : p.y) m["y"].push_back(io::to_json(y));
  if (auto n = override_int(c, "n")) {
    if (*n < 0) throw ValidationError("--n must be non-negative");
    json errs = json::array();
    for (const auto& e : qp_truncation_error(qp, p, static_cast<std::size_t>(*n))) errs.push_back(e.value);
    m["truncation_errors"] = {{"n", *n}, {"values", errs}};
  }
  return {csv.str(), m};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Demo configurations

/// Stand-in for the aircraft MPC example: the nominal pitch/altitude model
/// sampled at 0.5 s, with an elevator-rate input (input integrator as fifth
/// state), pitch limited to +-0.45 rad, altitude weight 1, rate weight 100,
/// horizon 35 and a Beta(2, 5) initial altitude on [-402, -381].
inline MpcSpec mpc_standin(int degree = 1) {
  LtiSystem c = aircraft_model();
  c.A1.resize(0, 0);
  MpcSpec s;
  s.system = with_input_integrator(zoh_discretize(c, 0.5));
  s.horizon = 35;
  s.Q = Eigen::MatrixXd::Zero(5, 5);
  s.Q(3, 3) = 1.0;
  s.R = Eigen::MatrixXd::Constant(1, 1, 100.0);
  const double inf = std::numeric_limits<double>::infinity();
  s.x_lo = Eigen::VectorXd::Constant(5, -inf);
  s.x_hi = Eigen::VectorXd::Constant(5, inf);
  s.x_lo[1] = -0.45;
  s.x_hi[1] = 0.45;
  const BasisPtr basis = build_basis(GermSpec::beta(2.0, 5.0, -402.0, -381.0), degree);
  for (int i = 0; i < 5; ++i) s.x0.push_back(PceVector::constant(basis, 0.0));
  s.x0[3] = PceVector::germ_variable(basis, 0);
  return s;
}

struct MpcDemo {
  CondensedMpc condensed;
  Propagation propagation;
  std::vector<int> active_state_stages;  // stages with an active state row, ascending
  std::vector<double> uncertainty;       // per step: max |coeff_j|, j >= 1, over input components
};

inline MpcDemo run_mpc_demo(const MpcSpec& spec) {
  MpcDemo d{condense_mpc(spec), {}, {}, {}};
  d.propagation = propagate(d.condensed.qp);
  for (std::size_t r : d.propagation.active.indices) {
    const MpcRow& row = d.condensed.rows[r];
    if (row.kind == MpcRow::Kind::State &&
        (d.active_state_stages.empty() || d.active_state_stages.back() != row.stage))
      d.active_state_stages.push_back(row.stage);
  }
  const int m = d.condensed.n_u;
  for (int k = 0; k < d.condensed.horizon; ++k) {
    double u = 0.0;
    for (int c = 0; c < m; ++c) {
      const PceVector& y = d.propagation.y[static_cast<std::size_t>(k * m + c)];
      for (std::size_t j = 1; j < y.size(); ++j) u = std::max(u, std::abs(y[j]));
    }
    d.uncertainty.push_back(u);
  }
  return d;
}

struct LtiErrorDemo {
  LtiSystem system;
  Eigen::VectorXd x0;
  GermSpec germ = GermSpec::legendre();
  Eigen::MatrixXd Q, R;
  std::vector<double> t_grid;
  std::vector<int> degrees = {2, 3, 4};
  std::vector<int> components = {3};
};

/// The uncertain aircraft under nominal LQR, altitude error for n = 2, 3, 4 on [0, 20] s.
inline LtiErrorDemo ltierr_default() {
  LtiErrorDemo d;
  d.system = aircraft_model();
  d.x0 = Eigen::VectorXd(4);
  d.x0 << 0, 0, 0, 40;
  d.Q = 0.001 * Eigen::MatrixXd::Identity(4, 4);
  d.R = Eigen::MatrixXd::Constant(1, 1, 100.0);
  for (int i = 0; i <= 200; ++i) d.t_grid.push_back(0.1 * i);
  return d;
}

namespace detail {

inline Result cmd_mpc_demo(const RunConfig& c) {
  MpcSpec spec;
  if (c.input_path.empty()) {
    spec = mpc_standin(override_int(c, "degree").value_or(1));
  } else {
    io::BasisCache cache;
    spec = io::mpc_from_json(read_json(c.input_path), cache, "input");
  }
  const MpcDemo d = run_mpc_demo(spec);
  const double dt = spec.system.dt;
  Csv csv({"t", "n", "component", "value"});
  const int m = d.condensed.n_u;
  for (int k = 0; k < d.condensed.horizon; ++k)
    for (int comp = 0; comp < m; ++comp) {
      const PceVector& y = d.propagation.y[static_cast<std::size_t>(k * m + comp)];
      for (std::size_t j = 0; j < y.size(); ++j) csv.row({num(k * dt), num(j), num(comp), num(y[j])});
    }
  json stages = json::array();
  for (int s : d.active_state_stages) stages.push_back(s * dt);
  json det = json::array();
  for (int k = 0; k < d.condensed.horizon; ++k)
    if (d.uncertainty[static_cast<std::size_t>(k)] <= 1e-9) det.push_back(k * dt);
  return {csv.str(),
          {{"source", c.input_path.empty() ? "built-in stand-in" : c.input_path},
           {"constant_active", d.propagation.constant_active},
           {"active", d.propagation.active.indices},
           {"active_state_times", stages},
           {"deterministic_input_times", det},
           {"mpc", io::to_json(spec)}}};
}

// Optional input: {"system", "x0", "Q", "R", "germ", "t_end", "dt", "degrees", "components"}
inline Result cmd_ltierr_demo(const RunConfig& c) {
  LtiErrorDemo d = ltierr_default();
  if (!c.input_path.empty()) {
    const json j = read_json(c.input_path);
    io::check_keys(j, {"system", "x0", "Q", "R", "germ", "t_end", "dt", "degrees", "components"}, "input");
    if (j.contains("system")) d.system = io::lti_from_json(j.at("system"), "input.system");
    if (j.contains("x0")) d.x0 = io::vector_from_json(j.at("x0"), "input.x0");
    if (j.contains("Q")) d.Q = io::matrix_from_json(j.at("Q"), "input.Q");
    if (j.contains("R")) d.R = io::matrix_from_json(j.at("R"), "input.R");
    if (j.contains("germ")) d.germ = io::germ_from_json(j.at("germ"), "input.germ");
    const double t_end = j.contains("t_end") ? io::number(j.at("t_end"), "input.t_end") : 20.0;
    const double step = j.contains("dt") ? io::number(j.at("dt"), "input.dt") : 0.1;
    if (!(t_end >= 0.0) || !(step > 0.0)) throw ValidationError("need t_end >= 0 and dt > 0");
    if (t_end / step > 1e6) throw ValidationError("time grid exceeds 1e6 points");
    d.t_grid.clear();
    const int steps = static_cast<int>(std::floor(t_end / step + 1e-9));
    for (int i = 0; i <= steps; ++i) d.t_grid.push_back(step * i);
    auto ints = [](const json& a, const std::string& w) {
      if (!a.is_array()) throw ValidationError(w + " must be an array");
      std::vector<int> v;
      for (std::size_t i = 0; i < a.size(); ++i) v.push_back(io::integer(a[i], w + "[" + std::to_string(i) + "]"));
      return v;
    };
    if (j.contains("degrees")) d.degrees = ints(j.at("degrees"), "input.degrees");
    if (j.contains("components")) d.components = ints(j.at("components"), "input.components");
  }
  if (auto n = override_int(c, "n")) d.degrees = {*n};
  const LqrDesign lqr = lqr_gain(d.system.A0, d.system.B, d.Q, d.R);
  const QuadraturePolicy pol = policy(c);
  const auto rows = pce_trajectory_error(d.system, lqr.K, d.x0, d.germ, d.t_grid, d.degrees, d.components, pol);
  Csv csv({"t", "n", "component", "value"});
  for (const auto& r : rows) csv.row({num(r.t), num(r.n), num(r.component), num(r.value)});
  return {csv.str(),
          {{"K", io::to_json(lqr.K)},
           {"riccati_residual", lqr.residual},
           {"system", io::to_json(d.system)},
           {"germ", io::to_json(d.germ)},
           {"quadrature", {{"rule", "gauss-tensor-doubling"}, {"tolerance", pol.tolerance}}}}};
}

inline Result cmd_table1(const RunConfig& c) {
  const int dz = override_int(c, "dz").value_or(static_cast<int>(c.z.size()));
  if (dz < 1 || dz > 3) throw ValidationError("--dz must be 1, 2 or 3");
  if (c.z.size() != static_cast<std::size_t>(dz)) throw ValidationError("--z must list exactly dz coefficients z_1..z_dz");
  std::vector<double> coeffs = {override_value(c, "z0").value_or(0.0)};
  coeffs.insert(coeffs.end(), c.z.begin(), c.z.end());
  const BasisPtr basis = build_basis(GermSpec::hermite(), dz);
  const PceVector z(basis, Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size())));
  const PolynomialMap square(1, {{1.0, {2}}});
  const PceVector y = galerkin_compose(square, std::span<const PceVector>(&z, 1));
  const TruncationError e = truncation_error_poly(y, static_cast<std::size_t>(dz));
  const Polynomial1d yp = compose_in_power_basis(square, std::span<const PceVector>(&z, 1));
  const Polynomial1d dk = yp.derivative(dz + 1);
  const TruncationError b = augustin_bound([&](std::span<const double> x) { return dk(x[0]); }, GermSpec::hermite(),
                                           dz + 1, static_cast<std::size_t>(dz), policy(c));
  Csv csv({"dz", "e_sq", "bound_sq"});
  csv.row({num(dz), num(e.value * e.value), num(b.value * b.value)});
  return {csv.str(), {{"z", coeffs}}};
}

inline Result dispatch(const RunConfig& c) {
  const bool needs_input = c.command == "project" || c.command == "error-poly" || c.command == "error-nonpoly" ||
                           c.command == "augustin" || c.command == "qp-propagate";
  if (needs_input && c.input_path.empty()) throw ValidationError("command '" + c.command + "' needs --input");
  if (c.command == "project") return cmd_project(c);
  if (c.command == "error-poly") return cmd_error_poly(c);
  if (c.command == "error-nonpoly") return cmd_error_nonpoly(c);
  if (c.command == "augustin") return cmd_augustin(c);
  if (c.command == "qp-propagate") return cmd_qp_propagate(c);
  if (c.command == "mpc-demo") return cmd_mpc_demo(c);
  if (c.command == "ltierr-demo") return cmd_ltierr_demo(c);
  if (c.command == "table1") return cmd_table1(c);
  throw ValidationError("unknown command '" + c.command + "'");
}

inline void write_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
}

}  // namespace detail

inline int exit_code_for(const Error& e) {
  const std::string k = e.kind();
  if (k == "validation" || k == "unsupported" || k == "construction") return kValidation;
  return kNumerical;
}

/// Runs one command. CSV goes to `output_path` (plus `<output_path>.manifest.json`)
/// or to `out`; failures are one JSON object on `err`.
inline int run(const RunConfig& config, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    detail::Result r = detail::dispatch(config);
    json manifest = {{"command", config.command}, {"input", config.input_path}, {"overrides", config.overrides}};
    if (!config.z.empty()) manifest["z"] = config.z;
    for (auto& [k, v] : r.manifest.items()) manifest[k] = v;
    if (config.output_path.empty()) {
      out << r.csv;
      return kOk;
    }
    std::ofstream f(config.output_path, std::ios::binary);
    if (!f) throw ValidationError("cannot write output file '" + config.output_path + "'");
    f << r.csv;
    std::ofstream mf(config.output_path + ".manifest.json", std::ios::binary);
    if (!mf) throw ValidationError("cannot write manifest next to '" + config.output_path + "'");
    mf << manifest.dump(2) << '\n';
    return kOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e);
    detail::write_error(err, e.kind(), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    detail::write_error(err, "internal", e.what(), kInternal);
    return kInternal;
  }
}

}  // namespace pceuq::cli
