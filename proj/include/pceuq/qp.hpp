#pragma once

// Convex QPs with uncertain linear cost and constraint offsets,
//
//   min_x  1/2 x^T H x + z1^T x   s.t.  A x + z2 <= 0,
//
// and propagation of PCE uncertainty in (z1, z2) through the argmin.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "pceuq/error.hpp"
#include "pceuq/numfmt.hpp"
#include "pceuq/pce.hpp"
#include "pceuq/quadrature.hpp"

namespace pceuq {

/// Ordered subset of constraint rows (0-based) holding with equality.
struct ActiveSet {
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }

  /// One-hot selector M with M(i, indices[i]) = 1.
  Eigen::MatrixXd selector(std::size_t n_con) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(indices.size()), static_cast<Eigen::Index>(n_con));
    for (std::size_t i = 0; i < indices.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(indices[i])) = 1.0;
    return m;
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < indices.size(); ++i) s += (i ? "," : "") + std::to_string(indices[i]);
    return s + "}";
  }

  friend bool operator==(const ActiveSet&, const ActiveSet&) = default;
};

struct QpOptions {
  double feasibility_tol = 1e-10;  // scaled by 1 + |z2_i|
  double multiplier_tol = 1e-10;   // multipliers at or below are weakly active
  double rank_tol = 1e-10;         // relative singular value cutoff for LICQ
  int max_iterations = 0;          // 0 selects 50 (n_con + 1)
};

struct QpSolution {
  Eigen::VectorXd x;
  ActiveSet active;                          // strictly positive multipliers
  Eigen::VectorXd lambda;                    // aligned with active.indices
  std::vector<std::size_t> weakly_active;    // tight rows with zero multiplier
  Eigen::VectorXd lambda_full;               // one entry per constraint row
  int iterations = 0;
};

namespace detail {

inline Eigen::MatrixXd rows_of(const Eigen::MatrixXd& A, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd r(static_cast<Eigen::Index>(idx.size()), A.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) r.row(static_cast<Eigen::Index>(i)) = A.row(static_cast<Eigen::Index>(idx[i]));
  return r;
}

inline bool full_row_rank(const Eigen::MatrixXd& rows, double rel_tol) {
  if (rows.rows() == 0) return true;
  if (rows.rows() > rows.cols()) return false;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows);
  const auto& s = svd.singularValues();
  return s.size() > 0 && s.minCoeff() > rel_tol * std::max(s.maxCoeff(), 1e-300);
}

}  // namespace detail

/// Dual active-set solve (Goldfarb-Idnani): start at the unconstrained
/// minimizer, repeatedly add the most violated constraint (lowest index on
/// ties), and drop working constraints whose multiplier would turn negative.
/// Each step solves the working-set KKT system densely.
inline QpSolution solve_qp(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const Eigen::VectorXd& z1,
                           const Eigen::VectorXd& z2, const QpOptions& opt = {}) {
  const Eigen::Index n = H.rows();
  const Eigen::Index m = A.rows();
  if (H.cols() != n || z1.size() != n || (m > 0 && A.cols() != n) || z2.size() != m)
    throw ValidationError("QP data dimensions are inconsistent");

  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) throw ValidationError("QP Hessian is not positive definite");

  QpSolution sol;
  sol.x = -llt.solve(z1);
  std::vector<std::size_t> work;
  std::vector<double> u;

  auto violation = [&](Eigen::Index i) { return A.row(i).dot(sol.x) + z2[i]; };
  const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : 50 * static_cast<int>(m + 1);

  int iter = 0;
  while (true) {
    // Most violated constraint outside the working set.
    Eigen::Index p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::find(work.begin(), work.end(), static_cast<std::size_t>(i)) != work.end()) continue;
      const double v = violation(i);
      if (v > opt.feasibility_tol * (1.0 + std::abs(z2[i])) && v > worst) {
        worst = v;
        p = i;
      }
    }
    if (p < 0) break;

    const Eigen::VectorXd np = -A.row(p).transpose();
    const double np_scale = np.dot(llt.solve(np));
    double up = 0.0;
    while (true) {
      if (++iter > max_iter)
        throw AccuracyError("active-set iteration limit reached", static_cast<double>(iter), worst);
      const Eigen::Index k = static_cast<Eigen::Index>(work.size());
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
      K.topLeftCorner(n, n) = H;
      for (Eigen::Index i = 0; i < k; ++i) {
        K.block(0, n + i, n, 1) = -A.row(static_cast<Eigen::Index>(work[static_cast<std::size_t>(i)])).transpose();
        K.block(n + i, 0, 1, n) = -A.row(static_cast<Eigen::Index>(work[static_cast<std::size_t>(i)]));
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
      rhs.head(n) = np;
      const Eigen::VectorXd sz = K.partialPivLu().solve(rhs);
      const Eigen::VectorXd dir = sz.head(n);
      const Eigen::VectorXd r = sz.tail(k);

      // Dual step: first working multiplier to reach zero.
      double t1 = std::numeric_limits<double>::infinity();
      std::size_t drop = 0;
      for (std::size_t i = 0; i < work.size(); ++i) {
        const double ri = r[static_cast<Eigen::Index>(i)];
        if (ri > 0.0) {
          const double t = u[i] / ri;
          if (t < t1 || (t == t1 && work[i] < work[drop])) {
            t1 = t;
            drop = i;
          }
        }
      }

      const double curvature = dir.dot(np);
      const bool null_step = curvature <= 1e-12 * np_scale;
      if (null_step) {
        if (!std::isfinite(t1)) {
          // n_p lies in the span of the working normals with nonpositive weights.
          std::vector<double> cert(static_cast<std::size_t>(m), 0.0);
          cert[static_cast<std::size_t>(p)] = 1.0;
          for (std::size_t i = 0; i < work.size(); ++i) cert[work[i]] = std::max(0.0, -r[static_cast<Eigen::Index>(i)]);
          throw InfeasibleError("QP constraints are infeasible (row " + std::to_string(p) + ")", cert);
        }
        for (std::size_t i = 0; i < work.size(); ++i) u[i] -= t1 * r[static_cast<Eigen::Index>(i)];
        up += t1;
        work.erase(work.begin() + static_cast<std::ptrdiff_t>(drop));
        u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
        continue;
      }

      const double t2 = violation(p) / curvature;
      const double t = std::min(t1, t2);
      sol.x += t * dir;
      for (std::size_t i = 0; i < work.size(); ++i) u[i] -= t * r[static_cast<Eigen::Index>(i)];
      up += t;
      if (t2 <= t1) {
        work.push_back(static_cast<std::size_t>(p));
        u.push_back(up);
        break;
      }
      work.erase(work.begin() + static_cast<std::ptrdiff_t>(drop));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }
  sol.iterations = iter;

  sol.lambda_full = Eigen::VectorXd::Zero(m);
  for (std::size_t i = 0; i < work.size(); ++i) sol.lambda_full[static_cast<Eigen::Index>(work[i])] = std::max(u[i], 0.0);

  std::vector<std::size_t> tight;
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool in_work = std::find(work.begin(), work.end(), static_cast<std::size_t>(i)) != work.end();
    const double slack = std::abs(violation(i));
    if (in_work || slack <= 1e-9 * (1.0 + std::abs(z2[i]))) tight.push_back(static_cast<std::size_t>(i));
  }
  for (std::size_t i : tight) {
    if (sol.lambda_full[static_cast<Eigen::Index>(i)] > opt.multiplier_tol) sol.active.indices.push_back(i);
    else sol.weakly_active.push_back(i);
  }
  if (!detail::full_row_rank(detail::rows_of(A, tight), opt.rank_tol))
    throw DegeneracyError("active constraint gradients are linearly dependent (LICQ fails) at the optimum");

  sol.lambda.resize(static_cast<Eigen::Index>(sol.active.size()));
  for (std::size_t i = 0; i < sol.active.size(); ++i)
    sol.lambda[static_cast<Eigen::Index>(i)] = sol.lambda_full[static_cast<Eigen::Index>(sol.active.indices[i])];
  return sol;
}

/// Largest of the stationarity residual, primal infeasibility, dual
/// infeasibility and complementarity violation.
inline double kkt_residual(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const Eigen::VectorXd& z1,
                           const Eigen::VectorXd& z2, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda_full) {
  double r = (H * x + z1 + A.transpose() * lambda_full).cwiseAbs().maxCoeff();
  if (A.rows() > 0) {
    const Eigen::VectorXd c = A * x + z2;
    r = std::max(r, c.maxCoeff());
    r = std::max(r, (-lambda_full).maxCoeff());
    r = std::max(r, c.cwiseProduct(lambda_full).cwiseAbs().maxCoeff());
  }
  return std::max(r, 0.0);
}

/// Blocks of -[[H, A^T M^T], [M A, 0]]^{-1} for a fixed active set.
struct KktPropagation {
  Eigen::MatrixXd W_h;  // n_x x n_x
  Eigen::MatrixXd W_b;  // n_x x n_act
  Eigen::MatrixXd V_h;  // n_act x n_x
  Eigen::MatrixXd V_b;  // n_act x n_act

  Eigen::MatrixXd stacked() const {
    Eigen::MatrixXd s(W_h.rows() + V_h.rows(), W_h.cols() + W_b.cols());
    s << W_h, W_b, V_h, V_b;
    return s;
  }
};

inline Eigen::MatrixXd kkt_matrix(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const ActiveSet& active) {
  const Eigen::Index n = H.rows();
  const Eigen::Index k = static_cast<Eigen::Index>(active.size());
  const Eigen::MatrixXd MA = detail::rows_of(A, active.indices);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
  K.topLeftCorner(n, n) = H;
  K.topRightCorner(n, k) = MA.transpose();
  K.bottomLeftCorner(k, n) = MA;
  return K;
}

inline KktPropagation kkt_propagation(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const ActiveSet& active,
                                      double rank_tol = 1e-10) {
  if (!detail::full_row_rank(detail::rows_of(A, active.indices), rank_tol))
    throw DegeneracyError("active set " + active.to_string() + " violates LICQ");
  const Eigen::Index n = H.rows();
  const Eigen::Index k = static_cast<Eigen::Index>(active.size());
  const Eigen::MatrixXd K = kkt_matrix(H, A, active);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n + k, n + k);
  // Symmetric equilibration D K D, then one step of iterative refinement.
  Eigen::VectorXd d(n + k);
  for (Eigen::Index i = 0; i < n + k; ++i) {
    const double r = K.row(i).cwiseAbs().maxCoeff();
    d[i] = r > 0.0 ? 1.0 / std::sqrt(r) : 1.0;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(d.asDiagonal() * K * d.asDiagonal());
  auto solve = [&](const Eigen::MatrixXd& rhs) -> Eigen::MatrixXd {
    return d.asDiagonal() * lu.solve(d.asDiagonal() * rhs);
  };
  Eigen::MatrixXd inv = -solve(I);
  inv -= solve(K * inv + I);
  const double err = (K * inv + I).cwiseAbs().maxCoeff();
  // Accept 1e-9 outright, or anything within a backward-stable bound for badly scaled data.
  const double stable = 1e3 * std::numeric_limits<double>::epsilon() *
                        (K.cwiseAbs() * inv.cwiseAbs()).rowwise().sum().maxCoeff();
  if (!(err <= std::max(1e-9, stable)))
    throw DegeneracyError("KKT matrix for active set " + active.to_string() + " is ill-conditioned (|K W + I| = " +
                          format_double(err) + ")");
  return {inv.topLeftCorner(n, n), inv.topRightCorner(n, k), inv.bottomLeftCorner(k, n), inv.bottomRightCorner(k, k)};
}

/// QP with PCE-valued linear cost h and constraint offsets b over one basis.
class QpProblem {
 public:
  QpProblem(Eigen::MatrixXd H, Eigen::MatrixXd A, std::vector<PceVector> h, std::vector<PceVector> b)
      : H_(std::move(H)), A_(std::move(A)), h_(std::move(h)), b_(std::move(b)) {
    validate();
  }

  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const std::vector<PceVector>& h() const { return h_; }
  const std::vector<PceVector>& b() const { return b_; }
  std::size_t n_x() const { return static_cast<std::size_t>(H_.rows()); }
  std::size_t n_con() const { return static_cast<std::size_t>(A_.rows()); }
  const BasisPtr& basis() const { return h_.front().basis(); }

  /// Coefficient j of every entry of h (resp. b).
  Eigen::VectorXd h_coeffs(std::size_t j) const { return coeff_column(h_, j); }
  Eigen::VectorXd b_coeffs(std::size_t j) const { return coeff_column(b_, j); }

  /// (z1, z2) at a germ point.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> realize(std::span<const double> xi) const {
    const auto phi = basis()->evaluate(xi);
    const Eigen::Map<const Eigen::VectorXd> p(phi.data(), static_cast<Eigen::Index>(phi.size()));
    Eigen::VectorXd z1(static_cast<Eigen::Index>(n_x())), z2(static_cast<Eigen::Index>(n_con()));
    for (std::size_t i = 0; i < n_x(); ++i) z1[static_cast<Eigen::Index>(i)] = h_[i].coeffs().dot(p);
    for (std::size_t i = 0; i < n_con(); ++i) z2[static_cast<Eigen::Index>(i)] = b_[i].coeffs().dot(p);
    return {z1, z2};
  }

 private:
  static Eigen::VectorXd coeff_column(const std::vector<PceVector>& v, std::size_t j) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) c[static_cast<Eigen::Index>(i)] = v[i][j];
    return c;
  }

  void validate() const {
    const Eigen::Index n = H_.rows();
    if (n == 0 || H_.cols() != n) throw ValidationError("H must be a non-empty square matrix");
    if (A_.rows() > 0 && A_.cols() != n) throw ValidationError("A must have as many columns as H");
    if (h_.size() != static_cast<std::size_t>(n)) throw ValidationError("h must have one PCE per decision variable");
    if (b_.size() != static_cast<std::size_t>(A_.rows())) throw ValidationError("b must have one PCE per constraint row");
    const double scale = std::max(1.0, H_.cwiseAbs().maxCoeff());
    if ((H_ - H_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ValidationError("H is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H_, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) throw ValidationError("H is not positive definite");
    for (const auto& v : {&h_, &b_})
      for (const auto& p : *v)
        if (!p.basis()->same_as(*h_.front().basis())) throw ValidationError("all QP data must share one PCE basis");
  }

  Eigen::MatrixXd H_;
  Eigen::MatrixXd A_;
  std::vector<PceVector> h_;
  std::vector<PceVector> b_;
};

/// Where propagate() solves the QP to decide whether the active set is constant.
struct ProbePolicy {
  int points_per_dim = 0;       // 0 selects degree + 1 (exact to 2 * degree + 1)
  bool include_vertices = true;  // support corners; grid extremes for unbounded dimensions
  QpOptions qp;
};

struct Propagation {
  bool constant_active = true;
  ActiveSet active;
  KktPropagation kkt;
  std::vector<PceVector> y;       // optimizer, one PCE per decision variable
  std::vector<PceVector> lambda;  // multipliers of `active`
  std::vector<std::size_t> weakly_active;  // union over probes

  // Per-probe data (always filled).
  RowMatrix probes;                 // probe points x n_xi
  std::vector<Eigen::VectorXd> probe_x;
  std::vector<ActiveSet> probe_active;
};

namespace detail {

inline RowMatrix probe_points(const GermSpec& germ, const QuadratureRule& grid, bool vertices) {
  const std::size_t d = germ.n_xi();
  std::size_t n_vert = 0;
  if (vertices && d <= 16) n_vert = std::size_t{1} << d;
  RowMatrix pts(static_cast<Eigen::Index>(grid.size() + n_vert), static_cast<Eigen::Index>(d));
  pts.topRows(static_cast<Eigen::Index>(grid.size())) = grid.nodes;
  for (std::size_t v = 0; v < n_vert; ++v) {
    for (std::size_t i = 0; i < d; ++i) {
      const bool hi = (v >> i) & 1U;
      double c;
      if (germ.family(i).bounded()) c = hi ? 1.0 : -1.0;
      else c = hi ? grid.nodes.col(static_cast<Eigen::Index>(i)).maxCoeff() : grid.nodes.col(static_cast<Eigen::Index>(i)).minCoeff();
      pts(static_cast<Eigen::Index>(grid.size() + v), static_cast<Eigen::Index>(i)) = c;
    }
  }
  return pts;
}

}  // namespace detail

/// Propagates the PCE of (h, b) through the argmin. With a constant active set
/// the optimizer's coefficients are y_j = W_h h_j + W_b M b_j exactly; otherwise
/// `constant_active` is false and `y` is the quadrature projection of the
/// per-node solutions.
inline Propagation propagate(const QpProblem& qp, const ProbePolicy& policy = {}) {
  const BasisPtr& basis = qp.basis();
  const int m = policy.points_per_dim > 0 ? policy.points_per_dim : basis->max_degree() + 1;
  const QuadratureRule grid = tensor_rule(basis->germ(), m);

  Propagation out;
  out.probes = detail::probe_points(basis->germ(), grid, policy.include_vertices);
  const std::size_t n_probe = static_cast<std::size_t>(out.probes.rows());
  for (std::size_t k = 0; k < n_probe; ++k) {
    const std::span<const double> xi(out.probes.data() + k * basis->n_xi(), basis->n_xi());
    const auto [z1, z2] = qp.realize(xi);
    QpSolution s;
    try {
      s = solve_qp(qp.H(), qp.A(), z1, z2, policy.qp);
    } catch (const DegeneracyError& e) {
      throw DegeneracyError(std::string(e.what()) + " at a probed realization", std::vector<double>(xi.begin(), xi.end()));
    }
    for (std::size_t i : s.weakly_active)
      if (std::find(out.weakly_active.begin(), out.weakly_active.end(), i) == out.weakly_active.end())
        out.weakly_active.push_back(i);
    out.probe_x.push_back(s.x);
    out.probe_active.push_back(s.active);
    if (!(s.active == out.probe_active.front())) out.constant_active = false;
  }
  std::sort(out.weakly_active.begin(), out.weakly_active.end());

  if (!out.constant_active) {
    // Projection of the per-node solutions with the probing grid.
    for (std::size_t i = 0; i < qp.n_x(); ++i) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
      std::vector<double> phi(basis->size());
      for (std::size_t k = 0; k < grid.size(); ++k) {
        basis->evaluate(grid.node(k), phi);
        for (std::size_t j = 0; j < phi.size(); ++j)
          g[static_cast<Eigen::Index>(j)] += grid.weights[static_cast<Eigen::Index>(k)] * out.probe_x[k][static_cast<Eigen::Index>(i)] * phi[j];
      }
      for (std::size_t j = 0; j < basis->size(); ++j) g[static_cast<Eigen::Index>(j)] /= basis->sq_norm(j);
      out.y.emplace_back(basis, g);
    }
    return out;
  }

  out.active = out.probe_active.front();
  out.kkt = kkt_propagation(qp.H(), qp.A(), out.active, policy.qp.rank_tol);
  const Eigen::MatrixXd M = out.active.selector(qp.n_con());
  const Eigen::Index nb = static_cast<Eigen::Index>(basis->size());
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(qp.n_x()), nb);
  Eigen::MatrixXd L(static_cast<Eigen::Index>(out.active.size()), nb);
  for (Eigen::Index j = 0; j < nb; ++j) {
    const Eigen::VectorXd hj = qp.h_coeffs(static_cast<std::size_t>(j));
    const Eigen::VectorXd bj = M * qp.b_coeffs(static_cast<std::size_t>(j));
    Y.col(j) = out.kkt.W_h * hj + out.kkt.W_b * bj;
    L.col(j) = out.kkt.V_h * hj + out.kkt.V_b * bj;
  }
  for (Eigen::Index i = 0; i < Y.rows(); ++i) out.y.emplace_back(basis, Y.row(i).transpose());
  for (Eigen::Index i = 0; i < L.rows(); ++i) out.lambda.emplace_back(basis, L.row(i).transpose());
  return out;
}

/// Element-wise || y_i - Pi_n y_i || for a constant active set:
/// sqrt(sum_{j>n} (w_i^h . h_j + w_i^b . M b_j)^2 ||phi_j||^2).
inline std::vector<TruncationError> qp_truncation_error(const QpProblem& qp, const Propagation& prop, std::size_t n) {
  if (!prop.constant_active)
    throw UnsupportedError("active set varies across realizations; use the per-node solutions instead");
  const BasisPtr& basis = qp.basis();
  const Eigen::MatrixXd M = prop.active.selector(qp.n_con());
  std::vector<TruncationError> out(qp.n_x());
  for (auto& e : out) e.n = n;
  for (std::size_t j = n + 1; j < basis->size(); ++j) {
    const Eigen::VectorXd c = prop.kkt.W_h * qp.h_coeffs(j) + prop.kkt.W_b * (M * qp.b_coeffs(j));
    for (std::size_t i = 0; i < qp.n_x(); ++i) {
      const double t = c[static_cast<Eigen::Index>(i)] * c[static_cast<Eigen::Index>(i)] * basis->sq_norm(j);
      out[i].detail.push_back(t);
      out[i].value += t;
    }
  }
  for (auto& e : out) e.value = std::sqrt(e.value);
  return out;
}

}  // namespace pceuq
