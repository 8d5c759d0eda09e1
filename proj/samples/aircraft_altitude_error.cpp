// Uncertain aircraft under nominal LQR: altitude truncation error over time for n = 2, 3, 4.
#include <cstdio>

#include "pceuq/lti.hpp"

int main() {
  using namespace pceuq;
  const LtiSystem sys = aircraft_model();
  const LqrDesign lqr = lqr_gain(sys.A0, sys.B, 0.001 * Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Constant(1, 1, 100.0));
  std::printf("LQR gain:");
  for (Eigen::Index i = 0; i < lqr.K.cols(); ++i) std::printf(" %.6g", lqr.K(0, i));
  std::printf("  (%d Newton steps)\n", lqr.iterations);

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
  x0[3] = 40.0;
  std::vector<double> ts;
  for (int i = 0; i <= 20; ++i) ts.push_back(static_cast<double>(i));
  const auto rows = pce_trajectory_error(sys, lqr.K, x0, GermSpec::legendre(), ts, {2, 3, 4}, {3});

  std::printf("%6s %14s %14s %14s\n", "t", "n=2", "n=3", "n=4");
  for (std::size_t i = 0; i < ts.size(); ++i)
    std::printf("%6.1f %14.6e %14.6e %14.6e\n", ts[i], rows[3 * i].value, rows[3 * i + 1].value, rows[3 * i + 2].value);
}
