#pragma once

// Gauss rules under each germ measure and their full tensor products.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pceuq/error.hpp"
#include "pceuq/germ.hpp"
#include "pceuq/numfmt.hpp"

namespace pceuq {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Real function of a germ point (native coordinates, one entry per dimension).
using GermFunction = std::function<double(std::span<const double>)>;

struct QuadratureRule {
  RowMatrix nodes;          // points x n_xi
  Eigen::VectorXd weights;  // sums to 1
  int exact_degree = -1;

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t n_xi() const { return static_cast<std::size_t>(nodes.cols()); }
  std::span<const double> node(std::size_t k) const {
    return {nodes.data() + k * static_cast<std::size_t>(nodes.cols()),
            static_cast<std::size_t>(nodes.cols())};
  }
};

/// How many points to use when the integrand is not a polynomial of known
/// degree: start at `initial_points` (0 selects 2(n+1)), double until the
/// result moves by less than `tolerance` relative, give up past
/// `max_points_per_dim`.
struct QuadraturePolicy {
  int initial_points = 0;
  double tolerance = 1e-10;
  int max_points_per_dim = 1 << 14;
};

/// Tensor grid size cap: PCEUQ_MAX_GRID if set, otherwise 10^7 points.
inline std::size_t max_grid_points() {
  if (const char* env = std::getenv("PCEUQ_MAX_GRID")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 10'000'000;
}

/// m-point Gauss rule for `family` on its native domain, exact to degree 2m-1.
///
/// Nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix of the
/// monic recurrence. Weights are the squared first components of the unit
/// eigenvectors; the eigenvector for node x is (q_0(x), ..., q_{m-1}(x)) in the
/// orthonormal polynomials q_j, so the first component squared is
/// 1 / sum_j q_j(x)^2, which is what is evaluated here.
inline QuadratureRule gauss_rule(const Family& family, int m) {
  if (m < 1) throw ValidationError("Gauss rule needs at least one point");
  const auto n = static_cast<std::size_t>(m);
  const MonicRecurrence rc = monic_recurrence(family, n);

  Eigen::VectorXd diag(m);
  Eigen::VectorXd sub(std::max(m - 1, 0));
  for (std::size_t k = 0; k < n; ++k) diag[static_cast<Eigen::Index>(k)] = rc.alpha[k];
  for (std::size_t k = 1; k < n; ++k) sub[static_cast<Eigen::Index>(k - 1)] = std::sqrt(rc.beta[k]);

  Eigen::VectorXd x(m);
  if (m == 1) {
    x[0] = diag[0];
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw ConstructionError("tridiagonal eigensolver did not converge for " + family.name() +
                              " rule with " + std::to_string(m) + " points");
    x = es.eigenvalues();
  }

  if (family.symmetric()) {
    for (int k = 0; k < m / 2; ++k) {
      const double v = 0.5 * (x[m - 1 - k] - x[k]);
      x[k] = -v;
      x[m - 1 - k] = v;
    }
    if (m % 2 == 1) x[m / 2] = 0.0;
  }
  if (family.bounded()) {
    for (int k = 0; k < m; ++k) x[k] = std::clamp(x[k], -1.0, 1.0);
  }

  Eigen::VectorXd w(m);
  for (int k = 0; k < m; ++k) {
    // Orthonormal recurrence: sqrt(b_{j+1}) q_{j+1} = (x - a_j) q_j - sqrt(b_j) q_{j-1}.
    double q_prev = 0.0;
    double q_cur = 1.0;
    double sum = 1.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double back = j == 0 ? 0.0 : std::sqrt(rc.beta[j]);
      const double q_next = ((x[k] - rc.alpha[j]) * q_cur - back * q_prev) / std::sqrt(rc.beta[j + 1]);
      q_prev = q_cur;
      q_cur = q_next;
      sum += q_cur * q_cur;
    }
    w[k] = rc.beta[0] / sum;
  }
  w /= w.sum();

  QuadratureRule rule;
  rule.nodes = x;
  rule.weights = std::move(w);
  rule.exact_degree = 2 * m - 1;
  return rule;
}

/// Full tensor product of per-dimension Gauss rules.
inline QuadratureRule tensor_rule(const GermSpec& germ, std::span<const int> m_per_dim,
                                  std::size_t max_points = max_grid_points()) {
  const std::size_t d = germ.n_xi();
  if (m_per_dim.size() != d)
    throw ValidationError("tensor rule needs one point count per germ dimension");
  std::size_t total = 1;
  for (int m : m_per_dim) {
    if (m < 1) throw ValidationError("Gauss rule needs at least one point");
    if (total > max_points / static_cast<std::size_t>(m))
      throw ResourceError("tensor grid exceeds the cap of " + std::to_string(max_points) +
                          " points");
    total *= static_cast<std::size_t>(m);
  }

  std::vector<QuadratureRule> rules;
  rules.reserve(d);
  int exact = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < d; ++i) {
    rules.push_back(gauss_rule(germ.family(i), m_per_dim[i]));
    exact = std::min(exact, rules.back().exact_degree);
  }

  QuadratureRule rule;
  rule.nodes.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(d));
  rule.weights.resize(static_cast<Eigen::Index>(total));
  rule.exact_degree = exact;

  // Last dimension varies fastest.
  std::vector<int> idx(d, 0);
  for (std::size_t p = 0; p < total; ++p) {
    double w = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      rule.nodes(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = rules[i].nodes(idx[i], 0);
      w *= rules[i].weights[idx[i]];
    }
    rule.weights[static_cast<Eigen::Index>(p)] = w;
    for (std::size_t i = d; i-- > 0;) {
      if (++idx[i] < m_per_dim[i]) break;
      idx[i] = 0;
    }
  }
  return rule;
}

/// Same number of points in every dimension.
inline QuadratureRule tensor_rule(const GermSpec& germ, int m,
                                  std::size_t max_points = max_grid_points()) {
  const std::vector<int> ms(germ.n_xi(), m);
  return tensor_rule(germ, std::span<const int>(ms), max_points);
}

/// Smallest per-dimension point count that integrates degree `degree` exactly.
inline int points_for_degree(int degree) { return std::max(1, degree / 2 + 1); }

namespace detail {

template <typename F>
double checked_eval(F&& f, std::span<const double> x) {
  const double v = f(x);
  if (!std::isfinite(v))
    throw EvaluationError("non-finite function value at quadrature node",
                          std::vector<double>(x.begin(), x.end()));
  return v;
}

}  // namespace detail

/// Sum_k w_k f(x_k).
template <typename F>
  requires std::invocable<F&, std::span<const double>>
double integrate(const QuadratureRule& rule, F&& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k)
    s += rule.weights[static_cast<Eigen::Index>(k)] * detail::checked_eval(f, rule.node(k));
  return s;
}

/// Discrete <f, g>; exact when deg(f g) <= rule.exact_degree.
template <typename F, typename G>
  requires std::invocable<F&, std::span<const double>> && std::invocable<G&, std::span<const double>>
double inner_product(const QuadratureRule& rule, F&& f, G&& g) {
  double s = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto x = rule.node(k);
    s += rule.weights[static_cast<Eigen::Index>(k)] * detail::checked_eval(f, x) *
         detail::checked_eval(g, x);
  }
  return s;
}

/// CSV with columns x_1..x_nxi, w.
inline void write_csv(const QuadratureRule& rule, std::ostream& os) {
  for (std::size_t i = 0; i < rule.n_xi(); ++i) os << "x_" << (i + 1) << ',';
  os << "w\n";
  for (std::size_t k = 0; k < rule.size(); ++k) {
    for (double v : rule.node(k)) os << format_double(v) << ',';
    os << format_double(rule.weights[static_cast<Eigen::Index>(k)]) << '\n';
  }
}

}  // namespace pceuq
