#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pceuq/error.hpp"
#include "pceuq/pce.hpp"
#include "pceuq/qp.hpp"

namespace pceuq {

/// x' = (A0 + z A1) x + B u, continuous or sampled with period dt.
struct LtiSystem {
  Eigen::MatrixXd A0;
  Eigen::MatrixXd A1;  // empty means zero
  Eigen::MatrixXd B;
  bool discrete = false;
  double dt = 0.0;

  Eigen::Index n_x() const { return A0.rows(); }
  Eigen::Index n_u() const { return B.cols(); }
  bool uncertain() const { return A1.size() > 0 && A1.cwiseAbs().maxCoeff() > 0.0; }

  Eigen::MatrixXd A(double z) const {
    if (A1.size() == 0) return A0;
    return A0 + z * A1;
  }

  void validate() const {
    const Eigen::Index n = A0.rows();
    if (n == 0 || A0.cols() != n) throw ValidationError("A0 must be a non-empty square matrix");
    if (A1.size() > 0 && (A1.rows() != n || A1.cols() != n)) throw ValidationError("A1 must match A0");
    if (B.rows() != n || B.cols() == 0) throw ValidationError("B must have one row per state and at least one column");
    if (discrete && !(dt > 0.0)) throw ValidationError("a discrete system needs dt > 0");
    if (!A0.allFinite() || !B.allFinite() || (A1.size() > 0 && !A1.allFinite()))
      throw ValidationError("system matrices must be finite");
  }
};

struct LqrDesign {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
  int iterations = 0;
  double residual = 0.0;
};

/// Zero-order-hold sampling of the nominal (z = 0) dynamics.
inline LtiSystem zoh_discretize(const LtiSystem& sys, double dt) {
  sys.validate();
  if (sys.discrete) throw ValidationError("system is already discrete");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (sys.uncertain()) throw UnsupportedError("sampling an uncertain system matrix is not supported");
  const Eigen::Index n = sys.n_x(), m = sys.n_u();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = sys.A0 * dt;
  M.topRightCorner(n, m) = sys.B * dt;
  const Eigen::MatrixXd E = M.exp();
  LtiSystem d;
  d.A0 = E.topLeftCorner(n, n);
  d.B = E.topRightCorner(n, m);
  d.discrete = true;
  d.dt = dt;
  return d;
}

/// Makes the input an increment: state [x; u_prev], input du, u = u_prev + du.
inline LtiSystem with_input_integrator(const LtiSystem& d) {
  d.validate();
  if (!d.discrete) throw ValidationError("input integration needs a discrete system");
  const Eigen::Index n = d.n_x(), m = d.n_u();
  LtiSystem a;
  a.A0 = Eigen::MatrixXd::Zero(n + m, n + m);
  a.A0.topLeftCorner(n, n) = d.A0;
  a.A0.topRightCorner(n, m) = d.B;
  a.A0.bottomRightCorner(m, m).setIdentity();
  a.B.resize(n + m, m);
  a.B.topRows(n) = d.B;
  a.B.bottomRows(m).setIdentity();
  a.discrete = true;
  a.dt = d.dt;
  return a;
}

// ---------------------------------------------------------------------------
// MPC condensation

struct MpcSpec {
  LtiSystem system;  // discrete
  int horizon = 1;
  Eigen::MatrixXd Q, R, P;  // P empty means P = Q
  // Box bounds; empty vectors mean unconstrained, infinite entries are skipped.
  Eigen::VectorXd x_lo, x_hi, u_lo, u_hi;
  std::vector<PceVector> x0;
};

struct MpcRow {
  enum class Kind { State, Input };
  Kind kind = Kind::State;
  int stage = 0;      // state rows constrain x_{stage}, 1..N; input rows u_{stage}, 0..N-1
  int component = 0;
  bool upper = true;
};

struct CondensedMpc {
  QpProblem qp;
  std::vector<MpcRow> rows;
  Eigen::MatrixXd Phi;    // [x_1; ...; x_N] = Phi x0 + Gamma U
  Eigen::MatrixXd Gamma;
  int n_x = 0;
  int n_u = 0;
  int horizon = 0;

  Eigen::VectorXd predicted_states(const Eigen::VectorXd& x0, const Eigen::VectorXd& U) const {
    return Phi * x0 + Gamma * U;
  }
};

namespace detail {

inline void check_bound(const Eigen::VectorXd& v, Eigen::Index n, const char* name) {
  if (v.size() != 0 && v.size() != n) throw ValidationError(std::string(name) + " must be empty or have one entry per component");
  for (double e : v)
    if (std::isnan(e)) throw ValidationError(std::string(name) + " contains NaN");
}

inline bool psd(const Eigen::MatrixXd& M, double tol = 1e-12) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, M.cwiseAbs().maxCoeff())) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace detail

inline void validate(const MpcSpec& s) {
  s.system.validate();
  if (!s.system.discrete) throw ValidationError("MPC needs a discrete system");
  if (s.horizon < 1) throw ValidationError("horizon must be positive");
  const Eigen::Index n = s.system.n_x(), m = s.system.n_u();
  if (s.Q.rows() != n || s.Q.cols() != n) throw ValidationError("Q must be n_x x n_x");
  if (s.R.rows() != m || s.R.cols() != m) throw ValidationError("R must be n_u x n_u");
  if (s.P.size() > 0 && (s.P.rows() != n || s.P.cols() != n)) throw ValidationError("P must be n_x x n_x");
  if (!detail::psd(s.Q)) throw ValidationError("Q must be symmetric positive semidefinite");
  if (!detail::psd(s.R)) throw ValidationError("R must be symmetric positive semidefinite");
  if (s.P.size() > 0 && !detail::psd(s.P)) throw ValidationError("P must be symmetric positive semidefinite");
  detail::check_bound(s.x_lo, n, "x_lo");
  detail::check_bound(s.x_hi, n, "x_hi");
  detail::check_bound(s.u_lo, m, "u_lo");
  detail::check_bound(s.u_hi, m, "u_hi");
  if (s.x0.size() != static_cast<std::size_t>(n)) throw ValidationError("x0 must have one PCE per state");
  for (const auto& x : s.x0)
    if (!x.basis()->same_as(*s.x0.front().basis())) throw ValidationError("x0 entries must share one PCE basis");
}

/// Dense QP in U = [u_0; ...; u_{N-1}] for
/// 1/2 sum_{k=1}^{N-1} x_k' Q x_k + 1/2 x_N' P x_N + 1/2 sum_{k=0}^{N-1} u_k' R u_k.
inline CondensedMpc condense_mpc(const MpcSpec& s) {
  validate(s);
  const int N = s.horizon;
  const Eigen::Index n = s.system.n_x(), m = s.system.n_u();
  const Eigen::MatrixXd& A = s.system.A0;
  const Eigen::MatrixXd& B = s.system.B;
  const Eigen::MatrixXd& P = s.P.size() > 0 ? s.P : s.Q;

  Eigen::MatrixXd Phi(n * N, n), Gamma = Eigen::MatrixXd::Zero(n * N, m * N);
  Eigen::MatrixXd Ak = A;
  for (int k = 0; k < N; ++k) {
    Phi.middleRows(n * k, n) = Ak;
    Ak = A * Ak;
  }
  for (int k = 0; k < N; ++k) {
    // x_{k+1} gets A^{k-j} B u_j.
    Gamma.block(n * k, m * k, n, m) = B;
    for (int j = k - 1; j >= 0; --j) Gamma.block(n * k, m * j, n, m) = A * Gamma.block(n * k, m * (j + 1), n, m);
  }

  Eigen::MatrixXd Qbar = Eigen::MatrixXd::Zero(n * N, n * N);
  for (int k = 0; k < N; ++k) Qbar.block(n * k, n * k, n, n) = k + 1 < N ? s.Q : P;
  Eigen::MatrixXd H = Gamma.transpose() * Qbar * Gamma;
  for (int k = 0; k < N; ++k) H.block(m * k, m * k, m, m) += s.R;
  H = 0.5 * (H + H.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(es.eigenvalues().minCoeff() > 1e-12 * std::max(hi, 1.0)))
      throw ConstructionError("condensed Hessian is not positive definite (check R)");
  }

  const BasisPtr basis = s.x0.front().basis();
  const Eigen::Index nb = static_cast<Eigen::Index>(basis->size());
  Eigen::MatrixXd X0(n, nb);  // row i = coefficients of x0_i
  for (Eigen::Index i = 0; i < n; ++i) X0.row(i) = s.x0[static_cast<std::size_t>(i)].coeffs().transpose();

  const Eigen::MatrixXd Fx = Gamma.transpose() * Qbar * Phi;
  const Eigen::MatrixXd Hc = Fx * X0;
  std::vector<PceVector> h;
  for (Eigen::Index i = 0; i < m * N; ++i) h.emplace_back(basis, Hc.row(i).transpose());

  std::vector<MpcRow> rows;
  std::vector<Eigen::RowVectorXd> arows;
  std::vector<PceVector> b;
  auto add = [&](MpcRow r, const Eigen::RowVectorXd& a, const Eigen::VectorXd& coeff) {
    rows.push_back(r);
    arows.push_back(a);
    b.emplace_back(basis, coeff);
  };
  for (int k = 0; k < N; ++k) {
    for (Eigen::Index c = 0; c < m; ++c) {
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(m * N);
      a[m * k + c] = 1.0;
      if (s.u_hi.size() > 0 && std::isfinite(s.u_hi[c])) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(nb);
        z[0] = -s.u_hi[c];
        add({MpcRow::Kind::Input, k, static_cast<int>(c), true}, a, z);
      }
      if (s.u_lo.size() > 0 && std::isfinite(s.u_lo[c])) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(nb);
        z[0] = s.u_lo[c];
        add({MpcRow::Kind::Input, k, static_cast<int>(c), false}, -a, z);
      }
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const Eigen::Index r = n * k + c;
      const Eigen::RowVectorXd g = Gamma.row(r);
      const Eigen::VectorXd free = (Phi.row(r) * X0).transpose();
      if (s.x_hi.size() > 0 && std::isfinite(s.x_hi[c])) {
        Eigen::VectorXd z = free;
        z[0] -= s.x_hi[c];
        add({MpcRow::Kind::State, k + 1, static_cast<int>(c), true}, g, z);
      }
      if (s.x_lo.size() > 0 && std::isfinite(s.x_lo[c])) {
        Eigen::VectorXd z = -free;
        z[0] += s.x_lo[c];
        add({MpcRow::Kind::State, k + 1, static_cast<int>(c), false}, -g, z);
      }
    }
  }
  Eigen::MatrixXd Acon(static_cast<Eigen::Index>(arows.size()), m * N);
  for (std::size_t i = 0; i < arows.size(); ++i) Acon.row(static_cast<Eigen::Index>(i)) = arows[i];

  return CondensedMpc{QpProblem(H, Acon, std::move(h), std::move(b)),
                      std::move(rows),
                      std::move(Phi),
                      std::move(Gamma),
                      static_cast<int>(n),
                      static_cast<int>(m),
                      N};
}

/// Step-by-step simulation of x_{k+1} = A x_k + B u_k; returns [x_1; ...; x_N].
inline Eigen::VectorXd simulate(const LtiSystem& d, const Eigen::VectorXd& x0, const Eigen::VectorXd& U) {
  const Eigen::Index n = d.n_x(), m = d.n_u();
  const Eigen::Index N = U.size() / m;
  Eigen::VectorXd X(n * N);
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 0; k < N; ++k) {
    x = d.A0 * x + d.B * U.segment(m * k, m);
    X.segment(n * k, n) = x;
  }
  return X;
}

// ---------------------------------------------------------------------------
// Continuous time

/// exp((A(z) - B K) t) x0.
inline Eigen::VectorXd state_transition(const LtiSystem& sys, const Eigen::MatrixXd& K, double t, double z,
                                        const Eigen::VectorXd& x0) {
  if (!(t >= 0.0)) throw ValidationError("t must be non-negative");
  if (K.rows() != sys.n_u() || K.cols() != sys.n_x()) throw ValidationError("K must be n_u x n_x");
  if (x0.size() != sys.n_x()) throw ValidationError("x0 must have n_x entries");
  if (t == 0.0) return x0;
  const Eigen::MatrixXd M = (sys.A(z) - sys.B * K) * t;
  return M.exp() * x0;
}

inline double spectral_abscissa(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

/// Solves Ac' X + X Ac + C = 0 through its Kronecker form.
inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Ac, const Eigen::MatrixXd& C) {
  const Eigen::Index n = Ac.rows();
  if (n * n > 4096) throw ResourceError("Lyapunov solve limited to 64 states");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(Ac' X) = (I kron Ac') vec X, vec(X Ac) = (Ac' kron I) vec X; column-major vec.
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) {
        L(j * n + i, j * n + k) += Ac(k, i);
        L(j * n + i, k * n + i) += Ac(k, j);
      }
  Eigen::VectorXd rhs = -C.reshaped();
  Eigen::VectorXd x = L.fullPivLu().solve(rhs);
  Eigen::MatrixXd X = x.reshaped(n, n);
  return 0.5 * (X + X.transpose());
}

inline double riccati_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                               const Eigen::MatrixXd& R, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd res = A.transpose() * P + P * A - P * B * R.ldlt().solve(B.transpose() * P) + Q;
  return res.norm();
}

/// Continuous-time LQR by Newton-Kleinman iteration.
inline LqrDesign lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& R, std::optional<Eigen::MatrixXd> K0 = std::nullopt,
                          int max_iterations = 100, double tolerance = 1e-9) {
  const Eigen::Index n = A.rows(), m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m || R.cols() != m)
    throw ValidationError("LQR dimensions are inconsistent");
  if (!detail::psd(Q)) throw ValidationError("Q must be symmetric positive semidefinite");
  Eigen::LLT<Eigen::MatrixXd> rllt(R);
  if (rllt.info() != Eigen::Success || (R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12 * R.cwiseAbs().maxCoeff())
    throw ValidationError("R must be symmetric positive definite");

  Eigen::MatrixXd K;
  if (K0) {
    K = *K0;
    if (K.rows() != m || K.cols() != n) throw ValidationError("initial gain must be n_u x n_x");
  } else if (spectral_abscissa(A) < 0.0) {
    K = Eigen::MatrixXd::Zero(m, n);
  } else {
    // Shift A until it is anti-stable; then K = B' X^-1 solves
    // (A - B K) X + X (A - B K)' = -2 beta X.
    const double beta = std::max(spectral_abscissa(A), 0.0) + 1.0;
    const Eigen::MatrixXd Ab = A + beta * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd X = solve_lyapunov(-Ab.transpose(), 2.0 * B * B.transpose());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(X);
    if (!lu.isInvertible())
      throw SynthesisError("no stabilizing initial gain found (pair not controllable); supply one");
    K = B.transpose() * lu.inverse();
  }
  if (!(spectral_abscissa(A - B * K) < 0.0)) throw SynthesisError("initial gain is not stabilizing; supply one");

  LqrDesign d;
  d.Q = Q;
  d.R = R;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::MatrixXd Ac = A - B * K;
    d.P = solve_lyapunov(Ac, Q + K.transpose() * R * K);
    K = rllt.solve(B.transpose() * d.P);
    d.iterations = it;
    d.residual = riccati_residual(A, B, Q, R, d.P);
    if (d.residual <= tolerance) break;
  }
  d.K = K;
  if (!(spectral_abscissa(A - B * K) < 0.0)) throw SynthesisError("Newton-Kleinman iteration lost stability");
  return d;
}

/// The aircraft pitch/altitude model with the uncertain entry A(0,0) = -1.2822 + 0.4 z.
inline LtiSystem aircraft_model(double uncertainty = 0.4) {
  LtiSystem s;
  s.A0.resize(4, 4);
  s.A0 << -1.2822, 0, 0.98, 0,
          0, 0, 1, 0,
          -5.4293, 0, -1.8366, 0,
          -128.2, 128.2, 0, 0;
  s.A1 = Eigen::MatrixXd::Zero(4, 4);
  s.A1(0, 0) = uncertainty;
  s.B.resize(4, 1);
  s.B << -0.3, 0, -17, 0;
  return s;
}

struct TrajectoryErrorRow {
  double t = 0.0;
  int n = 0;
  int component = 0;  // 0-based state index
  double value = 0.0;
  int points_per_dim = 0;
};

/// || x_c(t) - Pi_n x_c(t) || for each (t, n, component), ordered by t, then n, then component.
inline std::vector<TrajectoryErrorRow> pce_trajectory_error(const LtiSystem& sys, const Eigen::MatrixXd& K,
                                                            const Eigen::VectorXd& x0, const GermSpec& germ,
                                                            const std::vector<double>& t_grid,
                                                            const std::vector<int>& n_grid,
                                                            const std::vector<int>& components,
                                                            const QuadraturePolicy& policy = {}) {
  sys.validate();
  if (sys.discrete) throw ValidationError("trajectory errors need a continuous system");
  if (germ.n_xi() != 1) throw ValidationError("the system matrix depends on a single scalar germ");
  for (int c : components)
    if (c < 0 || c >= sys.n_x()) throw ValidationError("component index out of range");
  std::vector<BasisPtr> bases;
  for (int n : n_grid) {
    if (n < 0) throw ValidationError("degrees must be non-negative");
    bases.push_back(build_basis(germ, static_cast<std::size_t>(n)));
  }
  std::vector<TrajectoryErrorRow> out;
  for (double t : t_grid) {
    if (!(t >= 0.0)) throw ValidationError("times must be non-negative");
    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
      for (int c : components) {
        auto y = [&](std::span<const double> xi) {
          return state_transition(sys, K, t, germ.to_physical(0, xi[0]), x0)[c];
        };
        const TruncationError e = truncation_error_nonpoly(y, *bases[ni], policy);
        out.push_back({t, n_grid[ni], c, e.value, e.points_per_dim});
      }
    }
  }
  return out;
}

}  // namespace pceuq
