#pragma once

// Polynomial chaos expansions: projection, composition with polynomial maps,
// moments, and L2 truncation errors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pceuq/basis.hpp"
#include "pceuq/error.hpp"
#include "pceuq/polynomial.hpp"
#include "pceuq/quadrature.hpp"

namespace pceuq {

/// Coefficients of one scalar random variable in a shared basis.
class PceVector {
 public:
  PceVector() = default;
  PceVector(BasisPtr basis, Eigen::VectorXd coeffs) : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
    if (!basis_) throw ValidationError("PCE vector needs a basis");
    if (static_cast<std::size_t>(coeffs_.size()) != basis_->size())
      throw ValidationError("PCE vector has " + std::to_string(coeffs_.size()) +
                            " coefficients but the basis has " + std::to_string(basis_->size()) +
                            " elements");
  }
  explicit PceVector(BasisPtr basis)
      : PceVector(basis, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis ? basis->size() : 0))) {}

  static PceVector constant(BasisPtr basis, double c) {
    PceVector y(std::move(basis));
    y.coeffs_[0] = c;
    return y;
  }

  /// The physical coordinate of germ dimension `dim` (affine in xi_dim).
  static PceVector germ_variable(BasisPtr basis, std::size_t dim) {
    if (basis->max_degree() < 1) throw ValidationError("germ variable needs a basis of degree >= 1");
    const GermSpec& germ = basis->germ();
    const Family& f = germ.family(dim);
    // P_1(xi) = p0 + p1 xi.
    double p0 = 0.0, p1 = 1.0;
    if (f.kind == Family::Kind::Jacobi) {
      p0 = 0.5 * (f.a - f.b);
      p1 = 0.5 * (f.a + f.b + 2.0);
    }
    const double center = germ.to_physical(dim, 0.0);
    const double scale = germ.to_physical(dim, 1.0) - center;
    PceVector y(basis);
    y.coeffs_[0] = center - scale * p0 / p1;
    y.coeffs_[static_cast<Eigen::Index>(basis->linear_index(dim))] = scale / p1;
    return y;
  }

  /// mu + sigma * xi_dim for a Hermite dimension.
  static PceVector gaussian(BasisPtr basis, std::size_t dim, double mu, double sigma) {
    if (basis->germ().family(dim).kind != Family::Kind::HermiteProbabilists)
      throw ValidationError("gaussian PCE needs a Hermite dimension");
    PceVector y = constant(basis, mu);
    y.coeffs_[static_cast<Eigen::Index>(basis->linear_index(dim))] = sigma;
    return y;
  }

  const BasisPtr& basis() const { return basis_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  Eigen::VectorXd& coeffs() { return coeffs_; }
  std::size_t size() const { return static_cast<std::size_t>(coeffs_.size()); }
  double operator[](std::size_t j) const { return coeffs_[static_cast<Eigen::Index>(j)]; }

  double mean() const { return coeffs_[0]; }
  double variance() const {
    double v = 0.0;
    for (std::size_t j = 1; j < size(); ++j) v += coeffs_[static_cast<Eigen::Index>(j)] * coeffs_[static_cast<Eigen::Index>(j)] * basis_->sq_norm(j);
    return v;
  }

  /// Realization at a native-coordinate germ point.
  double operator()(std::span<const double> xi) const {
    const auto phi = basis_->evaluate(xi);
    double s = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) s += coeffs_[static_cast<Eigen::Index>(j)] * phi[j];
    return s;
  }

  /// Largest total degree carrying a coefficient with |c| > tol.
  int minimum_degree(double tol = 0.0) const {
    int d = 0;
    for (std::size_t j = 0; j < size(); ++j)
      if (std::abs(coeffs_[static_cast<Eigen::Index>(j)]) > tol) d = std::max(d, basis_->index(j).total());
    return d;
  }

  /// Same random variable expressed in the larger basis `target` (same germ,
  /// degree >= this basis' degree).
  PceVector padded_to(BasisPtr target) const {
    if (!(target->germ() == basis_->germ()) || target->max_degree() < basis_->max_degree())
      throw ValidationError("cannot pad a PCE into a basis of lower degree or another germ");
    PceVector y(target);
    y.coeffs_.head(coeffs_.size()) = coeffs_;
    return y;
  }

  friend PceVector operator+(const PceVector& x, const PceVector& y) {
    require_same_basis(x, y);
    return PceVector(x.basis_, x.coeffs_ + y.coeffs_);
  }
  friend PceVector operator-(const PceVector& x, const PceVector& y) {
    require_same_basis(x, y);
    return PceVector(x.basis_, x.coeffs_ - y.coeffs_);
  }
  friend PceVector operator*(double s, const PceVector& y) { return PceVector(y.basis_, s * y.coeffs_); }

 private:
  static void require_same_basis(const PceVector& x, const PceVector& y) {
    if (!x.basis_->same_as(*y.basis_)) throw ValidationError("PCE vectors live in different bases");
  }

  BasisPtr basis_;
  Eigen::VectorXd coeffs_;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments moments(const PceVector& y) { return {y.mean(), y.variance()}; }

/// Multivariate polynomial: sum of coeff * prod_i z_i^exponents[i].
struct PolynomialMap {
  struct Term {
    double coeff = 0.0;
    std::vector<int> exponents;
  };

  std::size_t n_inputs = 1;
  std::vector<Term> terms;

  PolynomialMap() = default;
  PolynomialMap(std::size_t n, std::vector<Term> t) : n_inputs(n), terms(std::move(t)) { validate(); }

  /// Univariate sum of c_k z^k.
  static PolynomialMap univariate(std::span<const double> ascending) {
    std::vector<Term> t;
    for (std::size_t k = 0; k < ascending.size(); ++k)
      if (ascending[k] != 0.0) t.push_back({ascending[k], {static_cast<int>(k)}});
    return PolynomialMap(1, std::move(t));
  }

  void validate() const {
    if (n_inputs == 0) throw ValidationError("polynomial map needs at least one input");
    for (const auto& t : terms) {
      if (t.exponents.size() != n_inputs)
        throw ValidationError("polynomial term has " + std::to_string(t.exponents.size()) +
                              " exponents, expected " + std::to_string(n_inputs));
      for (int e : t.exponents)
        if (e < 0) throw ValidationError("polynomial exponents must be non-negative");
    }
  }

  int degree() const {
    int d = 0;
    for (const auto& t : terms) {
      int s = 0;
      for (int e : t.exponents) s += e;
      d = std::max(d, s);
    }
    return d;
  }

  double operator()(std::span<const double> z) const {
    double s = 0.0;
    for (const auto& t : terms) {
      double v = t.coeff;
      for (std::size_t i = 0; i < n_inputs; ++i)
        for (int e = 0; e < t.exponents[i]; ++e) v *= z[i];
      s += v;
    }
    return s;
  }
};

/// || y - Pi_n y ||. `value` is exact unless `bound` is set.
struct TruncationError {
  double value = 0.0;
  std::size_t n = 0;
  std::vector<double> detail;  // per-discarded-element y_j^2 ||phi_j||^2, when known
  bool bound = false;
  std::vector<std::string> warnings;
  int points_per_dim = 0;  // quadrature points of the last evaluation, 0 if none
};

/// coeffs[j] = <y, phi_j> / ||phi_j||^2 with the given rule.
template <typename F>
PceVector project(F&& y_fn, BasisPtr basis, const QuadratureRule& rule) {
  if (rule.n_xi() != basis->n_xi()) throw ValidationError("quadrature rule and basis dimensions differ");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
  std::vector<double> phi(basis->size());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto x = rule.node(k);
    const double y = detail::checked_eval(y_fn, x);
    basis->evaluate(x, phi);
    const double wy = rule.weights[static_cast<Eigen::Index>(k)] * y;
    for (std::size_t j = 0; j < phi.size(); ++j) g[static_cast<Eigen::Index>(j)] += wy * phi[j];
  }
  for (std::size_t j = 0; j < basis->size(); ++j) g[static_cast<Eigen::Index>(j)] /= basis->sq_norm(j);
  return PceVector(std::move(basis), std::move(g));
}

/// Projection with the rule exact for integrands of degree `integrand_degree`.
template <typename F>
PceVector project_exact(F&& y_fn, BasisPtr basis, int integrand_degree) {
  const QuadratureRule rule = tensor_rule(basis->germ(), points_for_degree(integrand_degree));
  return project(std::forward<F>(y_fn), std::move(basis), rule);
}

namespace detail {

inline std::vector<int> doubling_schedule(int start, int cap) {
  std::vector<int> ms;
  for (int m = std::max(1, start); m <= cap; m *= 2) ms.push_back(m);
  if (ms.empty() || ms.back() != cap) ms.push_back(cap);
  return ms;
}

}  // namespace detail

/// Projection for non-polynomial y: doubles the per-dimension point count until
/// every coefficient moves by less than policy.tolerance relative to ||y||.
template <typename F>
PceVector project_adaptive(F&& y_fn, BasisPtr basis, const QuadraturePolicy& policy = {}) {
  const int start = policy.initial_points > 0 ? policy.initial_points : 2 * (basis->max_degree() + 1);
  std::optional<PceVector> prev;
  double prev_delta = std::numeric_limits<double>::infinity();
  for (int m : detail::doubling_schedule(start, policy.max_points_per_dim)) {
    QuadratureRule rule;
    try {
      rule = tensor_rule(basis->germ(), m);
    } catch (const ResourceError&) {
      break;
    }
    PceVector cur = project(y_fn, basis, rule);
    if (prev) {
      const double scale = std::sqrt(std::max(cur.mean() * cur.mean() + cur.variance(), 0.0));
      double delta = 0.0;
      for (std::size_t j = 0; j < cur.size(); ++j)
        delta = std::max(delta, std::abs(cur[j] - (*prev)[j]) * std::sqrt(basis->sq_norm(j)));
      if (delta <= policy.tolerance * std::max(scale, std::numeric_limits<double>::min())) return cur;
      prev_delta = delta;
    }
    prev = std::move(cur);
  }
  throw AccuracyError("projection did not converge under point doubling", prev_delta,
                      prev ? prev->mean() : std::numeric_limits<double>::quiet_NaN());
}

/// Exact PCE of f(z_1, ..., z_nz) for inputs in a shared basis of degree d_z,
/// in the enlarged basis of degree d_z * d_f. The composed polynomial is
/// projected with a rule exact to degree 2 d_z d_f.
inline PceVector galerkin_compose(const PolynomialMap& f, std::span<const PceVector> inputs,
                                  std::size_t max_basis_size = 100'000) {
  f.validate();
  if (inputs.size() != f.n_inputs)
    throw ValidationError("polynomial map takes " + std::to_string(f.n_inputs) + " inputs, got " +
                          std::to_string(inputs.size()));
  const BasisPtr& in_basis = inputs.front().basis();
  for (const auto& z : inputs)
    if (!z.basis()->same_as(*in_basis)) throw ValidationError("composition inputs must share one basis");

  const int out_degree = in_basis->max_degree() * f.degree();
  const std::uint64_t dim = basis_dimension(in_basis->n_xi(), static_cast<std::uint64_t>(out_degree));
  if (dim > max_basis_size)
    throw ResourceError("enlarged basis of dimension " + std::to_string(dim) + " exceeds the cap of " +
                        std::to_string(max_basis_size));
  BasisPtr out_basis = out_degree == in_basis->max_degree() ? in_basis : build_basis(in_basis->germ(), out_degree);

  std::vector<double> zs(inputs.size());
  std::vector<double> phi(in_basis->size());
  auto composed = [&](std::span<const double> xi) {
    in_basis->evaluate(xi, phi);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < phi.size(); ++j) s += inputs[i][j] * phi[j];
      zs[i] = s;
    }
    return f(zs);
  };
  return project_exact(composed, std::move(out_basis), 2 * out_degree);
}

/// sqrt(sum_{j>n} y_j^2 ||phi_j||^2); zero when n covers the whole basis.
inline TruncationError truncation_error_poly(const PceVector& y, std::size_t n) {
  TruncationError e;
  e.n = n;
  double s = 0.0;
  for (std::size_t j = n + 1; j < y.size(); ++j) {
    const double c = y[j] * y[j] * y.basis()->sq_norm(j);
    e.detail.push_back(c);
    s += c;
  }
  e.value = std::sqrt(s);
  return e;
}

/// sqrt(max(0, ||y||^2 - sum_j g_j^2 / ||phi_j||^2)) with g_j = <y, phi_j>.
/// Appends a warning when rounding drives the radicand negative.
inline double error_from_normal_equations(double norm_sq, std::span<const double> g,
                                          std::span<const double> sq_norms,
                                          std::vector<std::string>* warnings = nullptr) {
  double proj = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) proj += g[j] * g[j] / sq_norms[j];
  const double radicand = norm_sq - proj;
  if (radicand < 0.0) {
    if (warnings) warnings->push_back("negative radicand " + format_double(radicand) + " clamped to zero");
    return 0.0;
  }
  return std::sqrt(radicand);
}

namespace detail {

struct NonpolyEstimate {
  double value = 0.0;
  double norm_sq = 0.0;
  double literal = 0.0;
  std::vector<std::string> warnings;
};

// The projection coefficients solve the diagonal normal equations; the
// radicand ||y||^2 - g^T Q g equals the discrete residual sum
// sum_k w_k (y_k - Pi_n y(x_k))^2 whenever the rule integrates products of
// basis elements exactly, and that form does not cancel catastrophically.
template <typename F>
NonpolyEstimate nonpoly_estimate(F& y_fn, const BasisSpec& basis, const QuadratureRule& rule) {
  const std::size_t nb = basis.size();
  std::vector<double> ys(rule.size());
  std::vector<double> g(nb, 0.0);
  std::vector<double> phi(nb);
  double norm_sq = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto x = rule.node(k);
    const double y = checked_eval(y_fn, x);
    ys[k] = y;
    const double w = rule.weights[static_cast<Eigen::Index>(k)];
    norm_sq += w * y * y;
    basis.evaluate(x, phi);
    for (std::size_t j = 0; j < nb; ++j) g[j] += w * y * phi[j];
  }
  std::vector<double> c(nb);
  for (std::size_t j = 0; j < nb; ++j) c[j] = g[j] / basis.sq_norm(j);

  double residual = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    basis.evaluate(rule.node(k), phi);
    double p = 0.0;
    for (std::size_t j = 0; j < nb; ++j) p += c[j] * phi[j];
    const double r = ys[k] - p;
    residual += rule.weights[static_cast<Eigen::Index>(k)] * r * r;
  }

  NonpolyEstimate est;
  est.norm_sq = norm_sq;
  est.literal = error_from_normal_equations(norm_sq, g, basis.sq_norms(), &est.warnings);
  est.value = std::sqrt(std::max(residual, 0.0));
  return est;
}

}  // namespace detail

/// Truncation error of a general square-integrable y onto the whole `basis`
/// (n + 1 = basis.size()), with quadrature points doubled per `policy`.
template <typename F>
TruncationError truncation_error_nonpoly(F&& y_fn, const BasisSpec& basis, const QuadraturePolicy& policy = {}) {
  const int start = policy.initial_points > 0 ? policy.initial_points : 2 * (basis.max_degree() + 1);
  std::optional<detail::NonpolyEstimate> prev;
  int prev_m = 0;
  for (int m : detail::doubling_schedule(start, policy.max_points_per_dim)) {
    QuadratureRule rule;
    try {
      rule = tensor_rule(basis.germ(), m);
    } catch (const ResourceError&) {
      break;
    }
    detail::NonpolyEstimate cur = detail::nonpoly_estimate(y_fn, basis, rule);
    if (!std::isfinite(cur.norm_sq)) throw EvaluationError("y is not square-integrable under quadrature", {});
    if (prev) {
      const double norm = std::sqrt(cur.norm_sq);
      const bool norm_ok = std::abs(cur.norm_sq - prev->norm_sq) <= policy.tolerance * cur.norm_sq;
      const bool value_ok =
          std::abs(cur.value - prev->value) <= policy.tolerance * std::max(cur.value, 1e-2 * norm);
      if (norm_ok && value_ok) {
        TruncationError e;
        e.value = cur.value;
        e.n = basis.size() - 1;
        e.warnings = std::move(cur.warnings);
        e.points_per_dim = m;
        return e;
      }
    }
    prev = std::move(cur);
    prev_m = m;
  }
  const double last = prev ? prev->value : std::numeric_limits<double>::quiet_NaN();
  throw AccuracyError("truncation error did not converge under point doubling (last " +
                          std::to_string(prev_m) + " points per dimension)",
                      prev ? prev->literal : last, last);
}

/// Derivative-based bound on || y - Pi_n y || for a scalar Gaussian germ:
/// || d^k y / d xi^k || / prod_{i<k} sqrt(n - i + 1), valid for k <= n + 1.
template <typename F>
TruncationError augustin_bound(F&& derivative_fn, const GermSpec& germ, int k, std::size_t n,
                               const QuadraturePolicy& policy = {}) {
  if (germ.n_xi() != 1 || germ.family(0).kind != Family::Kind::HermiteProbabilists)
    throw UnsupportedError("derivative bound requires a univariate Hermite germ");
  if (k < 0 || static_cast<std::size_t>(k) > n + 1)
    throw ValidationError("derivative order must satisfy 0 <= k <= n + 1");

  const int start = policy.initial_points > 0 ? policy.initial_points : 2 * (static_cast<int>(n) + 1);
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int m : detail::doubling_schedule(start, policy.max_points_per_dim)) {
    const QuadratureRule rule = gauss_rule(germ.family(0), m);
    const double nrm_sq = inner_product(rule, derivative_fn, derivative_fn);
    if (!std::isnan(prev) && std::abs(nrm_sq - prev) <= policy.tolerance * std::max(nrm_sq, 1e-300)) {
      double denom = 1.0;
      for (int i = 0; i < k; ++i) denom *= std::sqrt(static_cast<double>(n) - i + 1.0);
      TruncationError e;
      e.value = std::sqrt(nrm_sq) / denom;
      e.n = n;
      e.bound = true;
      e.points_per_dim = m;
      return e;
    }
    prev = nrm_sq;
  }
  throw AccuracyError("derivative norm did not converge under point doubling", prev, prev);
}

/// Power-basis polynomial in xi equal to f(z_1(xi), ..., z_nz(xi)) for inputs
/// over a univariate germ.
inline Polynomial1d compose_in_power_basis(const PolynomialMap& f, std::span<const PceVector> inputs) {
  f.validate();
  if (inputs.size() != f.n_inputs) throw ValidationError("polynomial map input count mismatch");
  const BasisSpec& basis = *inputs.front().basis();
  if (basis.n_xi() != 1) throw UnsupportedError("power-basis composition needs a univariate germ");
  const auto phis = family_in_power_basis(basis.germ().family(0), basis.max_degree());
  std::vector<Polynomial1d> zs;
  for (const auto& z : inputs) {
    if (!z.basis()->same_as(basis)) throw ValidationError("composition inputs must share one basis");
    Polynomial1d p;
    for (std::size_t j = 0; j < z.size(); ++j) p = p + z[j] * phis[j];
    zs.push_back(std::move(p));
  }
  Polynomial1d y;
  for (const auto& t : f.terms) {
    Polynomial1d term = Polynomial1d::constant(t.coeff);
    for (std::size_t i = 0; i < f.n_inputs; ++i) term = term * zs[i].pow(t.exponents[i]);
    y = y + term;
  }
  return y;
}

}  // namespace pceuq
