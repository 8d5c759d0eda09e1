#pragma once

// Dense univariate polynomials in the power basis. Small helper for
// derivatives of composed maps of a scalar germ.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "pceuq/germ.hpp"

namespace pceuq {

class Polynomial1d {
 public:
  Polynomial1d() : c_{0.0} {}
  explicit Polynomial1d(std::vector<double> ascending) : c_(std::move(ascending)) {
    if (c_.empty()) c_.push_back(0.0);
  }
  static Polynomial1d constant(double v) { return Polynomial1d({v}); }
  static Polynomial1d x() { return Polynomial1d({0.0, 1.0}); }

  std::size_t degree() const { return c_.size() - 1; }
  const std::vector<double>& coeffs() const { return c_; }

  double operator()(double x) const {
    double r = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) r = r * x + c_[i];
    return r;
  }

  Polynomial1d derivative(int k = 1) const {
    std::vector<double> c = c_;
    for (int r = 0; r < k; ++r) {
      if (c.size() <= 1) return Polynomial1d();
      std::vector<double> d(c.size() - 1);
      for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = static_cast<double>(i) * c[i];
      c = std::move(d);
    }
    return Polynomial1d(std::move(c));
  }

  friend Polynomial1d operator+(const Polynomial1d& p, const Polynomial1d& q) {
    std::vector<double> c(std::max(p.c_.size(), q.c_.size()), 0.0);
    for (std::size_t i = 0; i < p.c_.size(); ++i) c[i] += p.c_[i];
    for (std::size_t i = 0; i < q.c_.size(); ++i) c[i] += q.c_[i];
    return Polynomial1d(std::move(c));
  }
  friend Polynomial1d operator*(const Polynomial1d& p, const Polynomial1d& q) {
    std::vector<double> c(p.c_.size() + q.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.c_.size(); ++i)
      for (std::size_t j = 0; j < q.c_.size(); ++j) c[i + j] += p.c_[i] * q.c_[j];
    return Polynomial1d(std::move(c));
  }
  friend Polynomial1d operator*(double s, Polynomial1d p) {
    for (double& v : p.c_) v *= s;
    return p;
  }

  Polynomial1d pow(int e) const {
    Polynomial1d r = constant(1.0);
    for (int i = 0; i < e; ++i) r = r * *this;
    return r;
  }

 private:
  std::vector<double> c_;
};

/// Power-basis form of the classical polynomials P_0 .. P_d of `family`.
inline std::vector<Polynomial1d> family_in_power_basis(const Family& family, int d) {
  std::vector<Polynomial1d> p;
  p.reserve(static_cast<std::size_t>(d) + 1);
  p.push_back(Polynomial1d::constant(1.0));
  if (d == 0) return p;
  const double a = family.a, b = family.b;
  switch (family.kind) {
    case Family::Kind::HermiteProbabilists:
    case Family::Kind::Legendre:
      p.push_back(Polynomial1d::x());
      break;
    case Family::Kind::Jacobi:
      p.push_back(Polynomial1d({0.5 * (a - b), 0.5 * (a + b + 2.0)}));
      break;
  }
  for (int n = 1; n < d; ++n) {
    const double dn = n;
    const auto& cur = p[static_cast<std::size_t>(n)];
    const auto& prev = p[static_cast<std::size_t>(n - 1)];
    switch (family.kind) {
      case Family::Kind::HermiteProbabilists:
        p.push_back(Polynomial1d::x() * cur + (-dn) * prev);
        break;
      case Family::Kind::Legendre:
        p.push_back((1.0 / (dn + 1.0)) * ((2.0 * dn + 1.0) * (Polynomial1d::x() * cur) + (-dn) * prev));
        break;
      case Family::Kind::Jacobi: {
        const double s = 2.0 * dn + a + b;
        const double c1 = 2.0 * (dn + 1.0) * (dn + 1.0 + a + b) * s;
        const Polynomial1d lin({(s + 1.0) * (a * a - b * b), (s + 1.0) * (s + 2.0) * s});
        const double c3 = 2.0 * (dn + a) * (dn + b) * (s + 2.0);
        p.push_back((1.0 / c1) * (lin * cur + (-c3) * prev));
        break;
      }
    }
  }
  return p;
}

}  // namespace pceuq
