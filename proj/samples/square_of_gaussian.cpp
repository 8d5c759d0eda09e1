// y = z^2 for a Gaussian z = mu + sigma xi: Galerkin PCE of y and its truncation errors.
#include <cstdio>
#include <cstdlib>

#include "pceuq/pce.hpp"

int main(int argc, char** argv) {
  using namespace pceuq;
  const double mu = argc > 1 ? std::atof(argv[1]) : 2.0;
  const double sigma = argc > 2 ? std::atof(argv[2]) : 0.5;

  const BasisPtr basis = build_basis(GermSpec::hermite(), 1);
  const PceVector z(basis, Eigen::Vector2d(mu, sigma));
  const PolynomialMap square(1, {{1.0, {2}}});
  const PceVector y = galerkin_compose(square, std::span<const PceVector>(&z, 1));

  std::printf("y coefficients:");
  for (std::size_t j = 0; j < y.size(); ++j) std::printf(" %.6g", y[j]);
  std::printf("\nmean %.6g  variance %.6g\n", y.mean(), y.variance());
  for (std::size_t n = 0; n <= 2; ++n) std::printf("e_%zu = %.17g\n", n, truncation_error_poly(y, n).value);
}
