#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pceuq/pce.hpp"
#include "test_oracles.hpp"

namespace pceuq {
namespace {

constexpr double kE = std::numbers::e;

PceVector hermite_input(std::vector<double> c) {
  const auto b = build_basis(GermSpec::hermite(), static_cast<int>(c.size()) - 1);
  return PceVector(b, Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
}

const PolynomialMap kSquare(1, {{1.0, {2}}});

TEST(Project, AffineGaussian) {
  const double mu = 1.3, sigma = 0.7;
  const auto b = build_basis(GermSpec::hermite(), 1);
  const PceVector y = project_exact([&](std::span<const double> x) { return mu + sigma * x[0]; }, b, 2);
  EXPECT_NEAR(y[0], mu, 1e-14);
  EXPECT_NEAR(y[1], sigma, 1e-14);
}

TEST(Project, SquaredGaussian) {
  const double mu = 1.3, sigma = 0.7;
  const auto b = build_basis(GermSpec::hermite(), 2);
  const PceVector y = project_exact([&](std::span<const double> x) { return std::pow(mu + sigma * x[0], 2); }, b, 4);
  EXPECT_NEAR(y[0], mu * mu + sigma * sigma, 1e-14);
  EXPECT_NEAR(y[1], 2 * sigma * mu, 1e-14);
  EXPECT_NEAR(y[2], sigma * sigma, 1e-14);
}

TEST(Project, Constant) {
  const auto b = build_basis(GermSpec::legendre(), 4);
  const PceVector y = project_exact([](std::span<const double>) { return -3.0; }, b, 8);
  EXPECT_NEAR(y[0], -3.0, 1e-15);
  for (std::size_t j = 1; j < y.size(); ++j) EXPECT_NEAR(y[j], 0.0, 1e-14);
}

TEST(Project, AdaptiveConvergesForExponential) {
  const auto b = build_basis(GermSpec::hermite(), 5);
  const PceVector y = project_adaptive([](std::span<const double> x) { return std::exp(x[0]); }, b);
  // <e^xi, He_j> = e^{1/2}; coefficient = e^{1/2} / j!.
  double fact = 1.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (j > 0) fact *= static_cast<double>(j);
    EXPECT_NEAR(y[j], std::sqrt(kE) / fact, 1e-12);
  }
}

TEST(GalerkinCompose, SquareOfGaussian) {
  const double mu = -0.4, sigma = 1.7;
  const PceVector z = hermite_input({mu, sigma});
  const PceVector y = galerkin_compose(kSquare, std::span<const PceVector>(&z, 1));
  ASSERT_EQ(y.size(), 3u);
  EXPECT_EQ(y.basis()->max_degree(), 2);
  EXPECT_NEAR(y[0], mu * mu + sigma * sigma, 1e-13);
  EXPECT_NEAR(y[1], 2 * sigma * mu, 1e-13);
  EXPECT_NEAR(y[2], sigma * sigma, 1e-13);
}

TEST(GalerkinCompose, IdentityAndSum) {
  const auto b = build_basis(GermSpec({Family::legendre(), Family::hermite()}), 2);
  Eigen::VectorXd c1(6), c2(6);
  c1 << 1, 2, 3, 4, 5, 6;
  c2 << -1, 0.5, 0.25, 0, 2, -3;
  const std::vector<PceVector> in = {PceVector(b, c1), PceVector(b, c2)};
  const PceVector id = galerkin_compose(PolynomialMap(1, {{1.0, {1}}}), std::span<const PceVector>(in.data(), 1));
  EXPECT_TRUE(id.basis()->same_as(*b));
  EXPECT_LT((id.coeffs() - c1).norm(), 1e-13);
  const PceVector sum = galerkin_compose(PolynomialMap(2, {{1.0, {1, 0}}, {1.0, {0, 1}}}), in);
  EXPECT_LT((sum.coeffs() - (c1 + c2)).norm(), 1e-13);
}

TEST(GalerkinCompose, ErrorsOnMismatchedInputsAndCap) {
  const PceVector z = hermite_input({0.0, 1.0});
  const PceVector w = hermite_input({0.0, 1.0, 0.5});
  const std::vector<PceVector> in = {z, w};
  EXPECT_THROW(galerkin_compose(PolynomialMap(2, {{1.0, {1, 1}}}), in), ValidationError);
  EXPECT_THROW(galerkin_compose(kSquare, in), ValidationError);
  const auto b = build_basis(GermSpec::hermite(4), 2);
  const PceVector big = PceVector::constant(b, 1.0);
  EXPECT_THROW(galerkin_compose(PolynomialMap(1, {{1.0, {10}}}), std::span<const PceVector>(&big, 1), 1000),
               ResourceError);
}

TEST(TruncationErrorPoly, SquareOfGaussian) {
  const double mu = 2.0, sigma = 0.5;
  const PceVector z = hermite_input({mu, sigma});
  const PceVector y = galerkin_compose(kSquare, std::span<const PceVector>(&z, 1));
  const auto e1 = truncation_error_poly(y, 1);
  EXPECT_NEAR(e1.value, std::sqrt(2.0) * sigma * sigma, 1e-14);
  ASSERT_EQ(e1.detail.size(), 1u);
  EXPECT_NEAR(e1.value * e1.value, e1.detail[0], 1e-15);
  EXPECT_EQ(truncation_error_poly(y, 2).value, 0.0);
  EXPECT_EQ(truncation_error_poly(y, 7).value, 0.0);
}

TEST(TruncationErrorPoly, SquaredDegreeTwoInput) {
  const double z1 = 1.0, z2 = 0.5;
  const PceVector z = hermite_input({0.3, z1, z2});
  const PceVector y = galerkin_compose(kSquare, std::span<const PceVector>(&z, 1));
  const auto e = truncation_error_poly(y, 2);
  EXPECT_NEAR(e.value, std::sqrt(24 * z2 * z2 * (z1 * z1 + z2 * z2)), 1e-12);
  double s = 0;
  for (double v : e.detail) s += v;
  EXPECT_NEAR(e.value * e.value, s, 1e-12 * s);
}

TEST(TruncationErrorNonpoly, ExponentialOfGaussian) {
  auto f = [](std::span<const double> x) { return std::exp(x[0]); };
  EXPECT_NEAR(truncation_error_nonpoly(f, *build_basis(GermSpec::hermite(), 0)).value, std::sqrt(kE * kE - kE), 1e-10);
  EXPECT_NEAR(truncation_error_nonpoly(f, *build_basis(GermSpec::hermite(), 1)).value, std::sqrt(kE * kE - 2 * kE), 1e-10);
  EXPECT_NEAR(std::sqrt(kE * kE - kE), 2.16120, 1e-5);
  EXPECT_NEAR(std::sqrt(kE * kE - 2 * kE), 1.39731, 1e-5);
}

TEST(TruncationErrorNonpoly, PolynomialInsideBasisHasZeroError) {
  auto f = [](std::span<const double> x) { return 1.0 + 2.0 * x[0] - 0.5 * x[0] * x[0] * x[0]; };
  EXPECT_LE(truncation_error_nonpoly(f, *build_basis(GermSpec::hermite(), 3)).value, 1e-10);
  EXPECT_LE(truncation_error_nonpoly(f, *build_basis(GermSpec::legendre(), 5)).value, 1e-10);
  auto g = [](std::span<const double> x) { return x[0] * x[1] + x[1] * x[1]; };
  EXPECT_LE(truncation_error_nonpoly(g, *build_basis(GermSpec({Family::hermite(), Family::jacobi(1, 2)}), 2)).value,
            1e-10);
}

TEST(TruncationErrorNonpoly, NormalEquationFormAgreesWithResidualForm) {
  // Well-conditioned case: the literal subtraction is accurate here.
  const auto b = build_basis(GermSpec::legendre(), 3);
  const QuadratureRule rule = tensor_rule(b->germ(), 40);
  auto f = [](std::span<const double> x) { return std::exp(2.0 * x[0]) / (2.0 + x[0]); };
  const double norm_sq = inner_product(rule, f, f);
  std::vector<double> g(b->size());
  for (std::size_t j = 0; j < g.size(); ++j)
    g[j] = inner_product(rule, f, [&](std::span<const double> x) { return eval_univariate(Family::legendre(), static_cast<int>(j), x[0]); });
  const double literal = error_from_normal_equations(norm_sq, g, b->sq_norms());
  const double adaptive = truncation_error_nonpoly(f, *b).value;
  EXPECT_NEAR(literal, adaptive, 1e-9 * adaptive);
}

TEST(TruncationErrorNonpoly, NegativeRadicandIsClampedWithWarning) {
  std::vector<std::string> warnings;
  const std::vector<double> g = {1.0}, norms = {1.0};
  EXPECT_EQ(error_from_normal_equations(1.0 - 1e-17 - 1e-16, g, norms, &warnings), 0.0);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(TruncationErrorNonpoly, NonConvergenceIsAnAccuracyError) {
  // |xi|^{-0.4} is integrable but has a singularity at 0 that Gauss rules resolve slowly.
  auto f = [](std::span<const double> x) { return std::pow(std::abs(x[0]) + 1e-300, -0.4); };
  QuadraturePolicy policy;
  policy.max_points_per_dim = 64;
  EXPECT_THROW(truncation_error_nonpoly(f, *build_basis(GermSpec::legendre(), 2), policy), AccuracyError);
}

TEST(AugustinBound, SquareOfGaussianOrders) {
  const double mu = 0.8, sigma = 1.9;
  const GermSpec germ = GermSpec::hermite();
  auto d1 = [&](std::span<const double> x) { return 2 * sigma * (mu + sigma * x[0]); };
  auto d2 = [&](std::span<const double>) { return 2 * sigma * sigma; };
  const auto b1 = augustin_bound(d1, germ, 1, 1);
  const auto b2 = augustin_bound(d2, germ, 2, 1);
  EXPECT_TRUE(b1.bound);
  EXPECT_NEAR(b1.value, std::sqrt(2.0) * sigma * std::sqrt(mu * mu + sigma * sigma), 1e-12);
  EXPECT_NEAR(b2.value, std::sqrt(2.0) * sigma * sigma, 1e-12);
  EXPECT_GE(b1.value, b2.value);
}

TEST(AugustinBound, SquaredDegreeTwoInput) {
  const double z0 = -0.2, z1 = 1.0, z2 = 0.5;
  const PceVector z = hermite_input({z0, z1, z2});
  const Polynomial1d y = compose_in_power_basis(kSquare, std::span<const PceVector>(&z, 1));
  const Polynomial1d d3 = y.derivative(3);
  const auto b = augustin_bound([&](std::span<const double> x) { return d3(x[0]); }, GermSpec::hermite(), 3, 2);
  EXPECT_NEAR(b.value, std::sqrt(24 * z2 * z2 * (z1 * z1 + 4 * z2 * z2)), 1e-12);
}

TEST(AugustinBound, IdentityOfHigherHermiteIsTight) {
  // f(z) = z with z = He_{n+1}: e_n and the k = 1 bound coincide, both sqrt((n+1)!).
  for (int n = 0; n <= 4; ++n) {
    std::vector<double> c(static_cast<std::size_t>(n) + 2, 0.0);
    c.back() = 1.0;
    const PceVector z = hermite_input(c);
    const double e = truncation_error_poly(z, static_cast<std::size_t>(n)).value;
    const Polynomial1d d1 = compose_in_power_basis(PolynomialMap(1, {{1.0, {1}}}), std::span<const PceVector>(&z, 1)).derivative(1);
    const double bound =
        augustin_bound([&](std::span<const double> x) { return d1(x[0]); }, GermSpec::hermite(), 1, static_cast<std::size_t>(n)).value;
    double fact = 1.0;
    for (int i = 2; i <= n + 1; ++i) fact *= i;
    EXPECT_NEAR(e, std::sqrt(fact), 1e-12 * std::sqrt(fact));
    EXPECT_NEAR(bound, e, 1e-10 * e);
  }
}

TEST(AugustinBound, UnsupportedConfigurations) {
  auto one = [](std::span<const double>) { return 1.0; };
  EXPECT_THROW(augustin_bound(one, GermSpec::legendre(), 1, 1), UnsupportedError);
  EXPECT_THROW(augustin_bound(one, GermSpec::hermite(2), 1, 1), UnsupportedError);
  EXPECT_THROW(augustin_bound(one, GermSpec::hermite(), 3, 1), ValidationError);
}

TEST(Moments, Examples) {
  const double mu = 1.5, sigma = 0.3;
  auto m = moments(hermite_input({mu, sigma}));
  EXPECT_DOUBLE_EQ(m.mean, mu);
  EXPECT_NEAR(m.variance, sigma * sigma, 1e-15);
  m = moments(hermite_input({4.0, 0.0, 0.0}));
  EXPECT_EQ(m.mean, 4.0);
  EXPECT_EQ(m.variance, 0.0);
  m = moments(hermite_input({mu * mu + sigma * sigma, 2 * sigma * mu, sigma * sigma}));
  EXPECT_NEAR(m.mean, mu * mu + sigma * sigma, 1e-15);
  EXPECT_NEAR(m.variance, 4 * sigma * sigma * mu * mu + 2 * std::pow(sigma, 4), 1e-14);
}

TEST(Moments, MatchMonteCarloWithinFourStandardErrors) {
  const auto b = build_basis(GermSpec({Family::hermite(), Family::legendre()}), 3);
  Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(b->size()), 0.9, -0.6);
  const PceVector y(b, c);
  const auto m = moments(y);

  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  const int N = 1'000'000;
  double s1 = 0, s2 = 0, s4 = 0;
  std::vector<double> xi(2);
  std::vector<double> samples(N);
  for (int i = 0; i < N; ++i) {
    xi[0] = normal(rng);
    xi[1] = uniform(rng);
    samples[i] = y(xi);
    s1 += samples[i];
  }
  const double mean = s1 / N;
  for (double v : samples) {
    s2 += (v - mean) * (v - mean);
    s4 += std::pow(v - mean, 4);
  }
  const double var = s2 / (N - 1);
  const double se_mean = std::sqrt(var / N);
  const double se_var = std::sqrt((s4 / N - var * var) / N);
  EXPECT_LE(std::abs(mean - m.mean), 4 * se_mean);
  EXPECT_LE(std::abs(var - m.variance), 4 * se_var);
}

// Property checks over random polynomial inputs.
class RandomPolynomials : public ::testing::Test {
 protected:
  std::mt19937_64 rng{7};
  std::uniform_real_distribution<double> coef{-2.0, 2.0};

  PceVector random_input(const BasisPtr& b) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(b->size()));
    for (auto& v : c) v = coef(rng);
    return PceVector(b, c);
  }
};

TEST_F(RandomPolynomials, ParsevalAndOrthogonalError) {
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = build_basis(trial % 2 ? GermSpec::hermite(2) : GermSpec({Family::legendre(), Family::jacobi(2, 1)}), 2);
    const PceVector z = random_input(b);
    const PceVector y = galerkin_compose(PolynomialMap(1, {{1.0, {2}}, {-0.5, {1}}}), std::span<const PceVector>(&z, 1));
    const QuadratureRule rule = tensor_rule(b->germ(), 6);
    const double norm_sq = inner_product(rule, [&](auto x) { return y(x); }, [&](auto x) { return y(x); });
    double parseval = 0;
    for (std::size_t j = 0; j < y.size(); ++j) parseval += y[j] * y[j] * y.basis()->sq_norm(j);
    EXPECT_NEAR(norm_sq, parseval, 1e-10 * parseval);

    const std::size_t n = b->prefix_length(1) - 1;
    auto proj = [&](std::span<const double> x) {
      const auto phi = y.basis()->evaluate(x);
      double s = 0;
      for (std::size_t j = 0; j <= n; ++j) s += y[j] * phi[j];
      return s;
    };
    const double cross = inner_product(rule, [&](auto x) { return y(x) - proj(x); }, proj);
    EXPECT_LE(std::abs(cross), 1e-10 * norm_sq);
  }
}

TEST_F(RandomPolynomials, MonotoneInRetainedIndex) {
  for (int trial = 0; trial < 10; ++trial) {
    const PceVector z = random_input(build_basis(GermSpec::hermite(2), 2));
    const PceVector y = galerkin_compose(PolynomialMap(1, {{1.0, {3}}}), std::span<const PceVector>(&z, 1));
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < y.size() + 2; ++n) {
      const double e = truncation_error_poly(y, n).value;
      EXPECT_LE(e, prev * (1 + 1e-15));
      prev = e;
    }
    EXPECT_EQ(prev, 0.0);
  }
}

TEST(PolynomialMap, DegreeAndValidation) {
  const PolynomialMap f(2, {{1.0, {2, 1}}, {3.0, {0, 1}}});
  EXPECT_EQ(f.degree(), 3);
  const std::vector<double> z = {2.0, -1.0};
  EXPECT_DOUBLE_EQ(f(z), -4.0 - 3.0);
  EXPECT_THROW(PolynomialMap(2, {{1.0, {1}}}), ValidationError);
  EXPECT_THROW(PolynomialMap(1, {{1.0, {-1}}}), ValidationError);
}

TEST(PceVector, GermVariablesAndPadding) {
  const auto b = build_basis(GermSpec({Family::legendre(), Family::hermite()}, {Interval{2.0, 6.0}, Interval{}}), 2);
  const PceVector x0 = PceVector::germ_variable(b, 0);
  EXPECT_DOUBLE_EQ(x0.mean(), 4.0);
  EXPECT_NEAR(x0.variance(), 4.0 / 3.0, 1e-14);  // uniform on [2, 6]
  const std::vector<double> pt = {0.5, -1.0};
  EXPECT_DOUBLE_EQ(x0(pt), 5.0);
  const PceVector padded = x0.padded_to(build_basis(b->germ(), 4));
  EXPECT_DOUBLE_EQ(padded(pt), 5.0);
  EXPECT_THROW(PceVector(b, Eigen::VectorXd::Zero(2)), ValidationError);
  EXPECT_EQ(x0.minimum_degree(), 1);
}

}  // namespace
}  // namespace pceuq
