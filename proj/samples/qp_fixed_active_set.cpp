// Two-variable QP with one uncertain constraint, propagated through the KKT system.
#include <cstdio>

#include "pceuq/qp.hpp"

int main() {
  using namespace pceuq;
  const BasisPtr basis = build_basis(GermSpec::legendre(), 2);

  Eigen::MatrixXd H(2, 2);
  H << 2.0, 0.5, 0.5, 1.0;
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 1.0, -1.0, 0.0;

  std::vector<PceVector> h = {PceVector(basis, Eigen::Vector3d(-4.0, 0.2, 0.0)), PceVector::constant(basis, -3.0)};
  std::vector<PceVector> b = {PceVector(basis, Eigen::Vector3d(1.0, 0.3, 0.1)), PceVector::constant(basis, 5.0)};
  const QpProblem qp(H, A, h, b);

  const Propagation p = propagate(qp);
  std::printf("active set constant over the germ: %s\n", p.constant_active ? "yes" : "no");
  std::printf("active rows:");
  for (std::size_t r : p.active.indices) std::printf(" %zu", r);
  std::printf("\n");
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    std::printf("x_%zu:", i);
    for (std::size_t j = 0; j < p.y[i].size(); ++j) std::printf(" %+.6f", p.y[i][j]);
    std::printf("\n");
  }
  for (std::size_t n = 0; n < basis->size(); ++n) {
    const auto e = qp_truncation_error(qp, p, n);
    std::printf("n=%zu  e = (%.3e, %.3e)\n", n, e[0].value, e[1].value);
  }
}
