#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pceuq/qp.hpp"
#include "qp_fixtures.hpp"

namespace pceuq {
namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

// Enumerate every candidate active set; keep primal- and dual-feasible KKT
// points; return the one with the smallest objective.
struct BruteForce {
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
};

BruteForce brute_force(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const Eigen::VectorXd& z1,
                       const Eigen::VectorXd& z2) {
  const int n = static_cast<int>(H.rows()), m = static_cast<int>(A.rows());
  BruteForce best;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < m; ++i)
      if (mask & (1 << i)) s.push_back(i);
    const int k = static_cast<int>(s.size());
    if (k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = H;
    rhs.head(n) = -z1;
    for (int i = 0; i < k; ++i) {
      K.block(0, n + i, n, 1) = A.row(s[i]).transpose();
      K.block(n + i, 0, 1, n) = A.row(s[i]);
      rhs[n + i] = -z2[s[i]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    if (k > 0 && sol.tail(k).minCoeff() < -1e-10) continue;
    if (m > 0 && (A * x + z2).maxCoeff() > 1e-9) continue;
    const double obj = 0.5 * x.dot(H * x) + z1.dot(x);
    if (obj < best.objective) best = {x, obj};
  }
  return best;
}

TEST(SolveQp, InteriorOptimum) {
  const auto s = solve_qp(mat({{1}}), mat({{1}}), vec({-1}), vec({-2}));
  EXPECT_NEAR(s.x[0], 1.0, 1e-14);
  EXPECT_TRUE(s.active.empty());
  EXPECT_EQ(s.lambda.size(), 0);
}

TEST(SolveQp, ActiveScalarBound) {
  const auto s = solve_qp(mat({{1}}), mat({{1}}), vec({-1}), vec({0}));
  EXPECT_NEAR(s.x[0], 0.0, 1e-14);
  EXPECT_EQ(s.active.indices, (std::vector<std::size_t>{0}));
  EXPECT_NEAR(s.lambda[0], 1.0, 1e-14);
}

TEST(SolveQp, TwoDimensionalHalfPlane) {
  const auto s = solve_qp(Eigen::MatrixXd::Identity(2, 2), mat({{1, 0}}), vec({-2, 0}), vec({0}));
  EXPECT_NEAR(s.x[0], 0.0, 1e-14);
  EXPECT_NEAR(s.x[1], 0.0, 1e-14);
  EXPECT_NEAR(s.lambda[0], 2.0, 1e-14);
  const auto bf = brute_force(Eigen::MatrixXd::Identity(2, 2), mat({{1, 0}}), vec({-2, 0}), vec({0}));
  EXPECT_LT((bf.x - s.x).norm(), 1e-12);
}

TEST(SolveQp, WeaklyActiveConstraintIsExcluded) {
  // Unconstrained optimum sits exactly on x <= 0.
  const auto s = solve_qp(mat({{2}}), mat({{1}}), vec({0}), vec({0}));
  EXPECT_TRUE(s.active.empty());
  EXPECT_EQ(s.weakly_active, (std::vector<std::size_t>{0}));
}

TEST(SolveQp, InfeasibleHasCertificate) {
  // x <= -1 and -x <= -1 (x >= 1).
  const Eigen::MatrixXd A = mat({{1}, {-1}});
  const Eigen::VectorXd z2 = vec({1, 1});
  try {
    solve_qp(mat({{1}}), A, vec({0}), z2);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    const Eigen::Map<const Eigen::VectorXd> y(e.certificate().data(), 2);
    EXPECT_GE(y.minCoeff(), 0.0);
    EXPECT_NEAR((A.transpose() * y).norm(), 0.0, 1e-12);
    EXPECT_GT(z2.dot(y), 0.0);
  }
}

TEST(SolveQp, DependentActiveRowsAreDegenerate) {
  // x1 + x2 <= 0 written twice, both binding.
  const Eigen::MatrixXd A = mat({{1, 1}, {2, 2}});
  EXPECT_THROW(solve_qp(Eigen::MatrixXd::Identity(2, 2), A, vec({-1, -1}), vec({0, 0})), DegeneracyError);
}

TEST(SolveQp, MatchesBruteForceOnRandomProblems) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> nx_d(1, 3), nc_d(1, 4);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = nx_d(rng), m = nc_d(rng);
    Eigen::MatrixXd L(n, n), A(m, n);
    for (auto& v : L.reshaped()) v = normal(rng);
    for (auto& v : A.reshaped()) v = normal(rng);
    const Eigen::MatrixXd H = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd z1(n), z2(m);
    for (auto& v : z1) v = normal(rng);
    for (auto& v : z2) v = normal(rng);
    const auto bf = brute_force(H, A, z1, z2);
    if (!std::isfinite(bf.objective)) {
      EXPECT_THROW(solve_qp(H, A, z1, z2), InfeasibleError);
      continue;
    }
    const auto s = solve_qp(H, A, z1, z2);
    EXPECT_LT((s.x - bf.x).norm(), 1e-8 * (1 + bf.x.norm())) << "trial " << trial;
    EXPECT_LE(kkt_residual(H, A, z1, z2, s.x, s.lambda_full), 1e-8);
    EXPECT_GE(s.lambda_full.minCoeff(), -1e-10);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(KktPropagation, BlocksInvertTheKktMatrix) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const QpProblem qp = fixtures::random_fixed_active_qp(rng);
    const Propagation p = propagate(qp);
    const Eigen::MatrixXd K = kkt_matrix(qp.H(), qp.A(), p.active);
    const Eigen::MatrixXd prod = K * p.kkt.stacked();
    EXPECT_LE((prod + Eigen::MatrixXd::Identity(K.rows(), K.cols())).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Propagate, InactiveConstraintGivesLinearMap) {
  const BasisPtr b = build_basis(GermSpec::hermite(), 1);
  const QpProblem qp(mat({{1}}), mat({{1}}), {PceVector(b, vec({-1, 0.1}))}, {PceVector::constant(b, -2.0)});
  const Propagation p = propagate(qp);
  ASSERT_TRUE(p.constant_active);
  EXPECT_TRUE(p.active.empty());
  EXPECT_NEAR(p.y[0][0], 1.0, 1e-14);
  EXPECT_NEAR(p.y[0][1], -0.1, 1e-14);
}

TEST(Propagate, PinnedAtBoundaryIsDeterministic) {
  const BasisPtr b = build_basis(GermSpec::legendre(), 2);
  const QpProblem qp(mat({{1}}), mat({{1}}), {PceVector(b, vec({-1, 0.2, 0.1}))}, {PceVector(b, vec({0, 0, 0}))});
  const Propagation p = propagate(qp);
  ASSERT_TRUE(p.constant_active);
  EXPECT_EQ(p.active.indices, (std::vector<std::size_t>{0}));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(p.y[0][j], 0.0, 1e-14);
  // The multiplier absorbs the uncertainty: lambda = -z1.
  EXPECT_NEAR(p.lambda[0][0], 1.0, 1e-14);
  EXPECT_NEAR(p.lambda[0][1], -0.2, 1e-14);
}

TEST(Propagate, MatchesSamplingProjection) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const QpProblem qp = fixtures::random_fixed_active_qp(rng);
    const Propagation p = propagate(qp);
    const BasisPtr& b = qp.basis();
    const QuadratureRule rule = tensor_rule(b->germ(), b->max_degree() + 1);
    for (std::size_t i = 0; i < qp.n_x(); ++i) {
      const PceVector oracle = project(
          [&](std::span<const double> xi) {
            const auto [z1, z2] = qp.realize(xi);
            return solve_qp(qp.H(), qp.A(), z1, z2).x[static_cast<Eigen::Index>(i)];
          },
          b, rule);
      EXPECT_LE((oracle.coeffs() - p.y[i].coeffs()).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Propagate, VaryingActiveSetIsFlagged) {
  // x <= 0 binds only for xi > 0 when z1 = -xi.
  const BasisPtr b = build_basis(GermSpec::legendre(), 1);
  const QpProblem qp(mat({{1}}), mat({{1}}), {PceVector(b, vec({0, -1}))}, {PceVector::constant(b, 0.0)});
  const Propagation p = propagate(qp);
  EXPECT_FALSE(p.constant_active);
  EXPECT_EQ(p.y.size(), 1u);
  EXPECT_THROW(qp_truncation_error(qp, p, 0), UnsupportedError);
}

TEST(Propagate, DegenerateRealizationIsNamed) {
  const BasisPtr b = build_basis(GermSpec::legendre(), 1);
  const QpProblem qp(Eigen::MatrixXd::Identity(2, 2), mat({{1, 1}, {2, 2}}),
                     {PceVector(b, vec({-1, 0.1})), PceVector(b, vec({-1, 0.1}))},
                     {PceVector::constant(b, 0.0), PceVector::constant(b, 0.0)});
  try {
    propagate(qp);
    FAIL() << "expected DegeneracyError";
  } catch (const DegeneracyError& e) {
    EXPECT_EQ(e.realization().size(), 1u);
  }
}

TEST(QpTruncationError, ZeroWhenAllRetained) {
  std::mt19937_64 rng(9);
  const QpProblem qp = fixtures::random_fixed_active_qp(rng);
  const Propagation p = propagate(qp);
  for (std::size_t n = qp.basis()->size() - 1; n < qp.basis()->size() + 2; ++n)
    for (const auto& e : qp_truncation_error(qp, p, n)) EXPECT_LE(e.value, 1e-10);
}

TEST(QpTruncationError, ScalarInactiveCase) {
  const BasisPtr b = build_basis(GermSpec::hermite(), 2);
  const QpProblem qp(mat({{1}}), mat({{1}}), {PceVector(b, vec({-1, 0.1, 0.05}))}, {PceVector::constant(b, -100.0)});
  const Propagation p = propagate(qp);
  const auto e = qp_truncation_error(qp, p, 1);
  EXPECT_NEAR(e[0].value, 0.05 * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(e[0].value, truncation_error_poly(p.y[0], 1).value, 1e-14);
}

TEST(QpTruncationError, DeterministicDataHasNoError) {
  const BasisPtr b = build_basis(GermSpec::legendre(2), 2);
  const QpProblem qp(mat({{2, 0}, {0, 1}}), mat({{1, 1}}), {PceVector::constant(b, -1), PceVector::constant(b, -1)},
                     {PceVector::constant(b, 0.5)});
  const Propagation p = propagate(qp);
  for (std::size_t n = 0; n < 6; ++n)
    for (const auto& e : qp_truncation_error(qp, p, n)) EXPECT_EQ(e.value, 0.0);
}

TEST(QpTruncationError, ScalesLinearlyWithPerturbation) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 5; ++t) {
    const QpProblem qp = fixtures::random_fixed_active_qp(rng);
    const double s = -3.5;
    auto scaled = [&](const std::vector<PceVector>& v) {
      std::vector<PceVector> out;
      for (const auto& p : v) {
        Eigen::VectorXd c = p.coeffs();
        c.tail(c.size() - 1) *= s;
        out.emplace_back(p.basis(), c);
      }
      return out;
    };
    const QpProblem qs(qp.H(), qp.A(), scaled(qp.h()), scaled(qp.b()));
    const Propagation p = propagate(qp);
    const Propagation ps = propagate(qs);
    ASSERT_TRUE(ps.constant_active);
    ASSERT_EQ(p.active, ps.active);
    const auto e = qp_truncation_error(qp, p, 0);
    const auto es = qp_truncation_error(qs, ps, 0);
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(es[i].value, std::abs(s) * e[i].value, 1e-12 * (1 + es[i].value));
  }
}

TEST(QpProblem, Validation) {
  const BasisPtr b = build_basis(GermSpec::legendre(), 1);
  const BasisPtr b2 = build_basis(GermSpec::legendre(), 2);
  const auto c = PceVector::constant(b, 0.0);
  EXPECT_THROW(QpProblem(mat({{1, 2}, {0, 1}}), mat({{1, 0}}), {c, c}, {c}), ValidationError);
  EXPECT_THROW(QpProblem(mat({{1, 0}, {0, -1}}), mat({{1, 0}}), {c, c}, {c}), ValidationError);
  EXPECT_THROW(QpProblem(mat({{1}}), mat({{1}}), {c}, {PceVector::constant(b2, 0.0)}), ValidationError);
  EXPECT_THROW(QpProblem(mat({{1}}), mat({{1}}), {c}, {}), ValidationError);
}

}  // namespace
}  // namespace pceuq
