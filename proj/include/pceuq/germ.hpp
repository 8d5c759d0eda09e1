#pragma once

// Univariate orthogonal polynomial families and the stochastic germ they are
// orthogonal under. Polynomials use the classical (non-normalized) convention;
// every weight is normalized to a probability density on its native domain:
//   HermiteProbabilists  standard normal on (-inf, inf)
//   Legendre             density 1/2 on [-1, 1]
//   Jacobi(a, b)         (1-x)^a (1+x)^b / (2^(a+b+1) B(a+1, b+1)) on [-1, 1]

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pceuq/error.hpp"

namespace pceuq {

struct Family {
  enum class Kind { HermiteProbabilists, Legendre, Jacobi };

  Kind kind = Kind::HermiteProbabilists;
  double a = 0.0;
  double b = 0.0;

  static Family hermite() { return {Kind::HermiteProbabilists, 0.0, 0.0}; }
  static Family legendre() { return {Kind::Legendre, 0.0, 0.0}; }
  static Family jacobi(double a, double b) {
    if (!(a > -1.0) || !(b > -1.0))
      throw ValidationError("Jacobi parameters must satisfy a > -1 and b > -1");
    return {Kind::Jacobi, a, b};
  }
  /// Beta(alpha, beta) on the native domain [-1, 1]: a = beta - 1, b = alpha - 1.
  /// The density grows like (1+x)^(alpha-1) near -1, which maps to the lower
  /// end of the physical support.
  static Family beta(double alpha, double beta) { return jacobi(beta - 1.0, alpha - 1.0); }

  bool bounded() const { return kind != Kind::HermiteProbabilists; }
  /// Weight symmetric about zero.
  bool symmetric() const { return kind != Kind::Jacobi || a == b; }

  std::string name() const {
    switch (kind) {
      case Kind::HermiteProbabilists: return "hermite";
      case Kind::Legendre: return "legendre";
      case Kind::Jacobi: return "jacobi";
    }
    return "unknown";
  }

  friend bool operator==(const Family&, const Family&) = default;
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Tensor-product germ. Dimension i has family `families[i]`; bounded families
/// carry a physical support onto which [-1, 1] is mapped affinely.
class GermSpec {
 public:
  GermSpec() = default;

  explicit GermSpec(std::vector<Family> families) : families_(std::move(families)) {
    supports_.reserve(families_.size());
    for (const auto& f : families_)
      supports_.push_back(f.bounded() ? Interval{-1.0, 1.0} : Interval{});
    validate();
  }

  GermSpec(std::vector<Family> families, std::vector<Interval> supports)
      : families_(std::move(families)), supports_(std::move(supports)) {
    validate();
  }

  static GermSpec hermite(std::size_t n_xi = 1) {
    return GermSpec(std::vector<Family>(n_xi, Family::hermite()));
  }
  static GermSpec legendre(std::size_t n_xi = 1) {
    return GermSpec(std::vector<Family>(n_xi, Family::legendre()));
  }
  /// Univariate Beta(alpha, beta) germ on [lo, hi].
  static GermSpec beta(double alpha, double beta, double lo, double hi) {
    return GermSpec({Family::beta(alpha, beta)}, {Interval{lo, hi}});
  }

  std::size_t n_xi() const { return families_.size(); }
  const std::vector<Family>& families() const { return families_; }
  const std::vector<Interval>& supports() const { return supports_; }
  const Family& family(std::size_t i) const { return families_.at(i); }
  const Interval& support(std::size_t i) const { return supports_.at(i); }

  /// Physical coordinate of germ coordinate `xi` in dimension `i`.
  double to_physical(std::size_t i, double xi) const {
    if (!families_[i].bounded()) return xi;
    const auto& s = supports_[i];
    return 0.5 * (s.lo + s.hi) + 0.5 * (s.hi - s.lo) * xi;
  }

  friend bool operator==(const GermSpec&, const GermSpec&) = default;

 private:
  void validate() const {
    if (families_.empty()) throw ValidationError("germ must have at least one dimension");
    if (supports_.size() != families_.size())
      throw ValidationError("germ supports must have one entry per dimension");
    for (std::size_t i = 0; i < families_.size(); ++i) {
      const auto& f = families_[i];
      if (f.kind == Family::Kind::Jacobi && (!(f.a > -1.0) || !(f.b > -1.0)))
        throw ValidationError("Jacobi parameters must satisfy a > -1 and b > -1");
      const auto& s = supports_[i];
      if (f.bounded()) {
        if (!s.finite() || !(s.lo < s.hi))
          throw ValidationError("bounded family in dimension " + std::to_string(i) +
                                " needs a finite support lo < hi");
      } else if (s.finite() || !(std::isinf(s.lo) && std::isinf(s.hi))) {
        throw ValidationError("Hermite dimension " + std::to_string(i) +
                              " must have an unbounded support");
      }
    }
  }

  std::vector<Family> families_;
  std::vector<Interval> supports_;
};

/// Value of the classical degree-j polynomial of `family` at x.
inline double eval_univariate(const Family& family, int j, double x) {
  if (j < 0) throw ValidationError("polynomial degree must be non-negative");
  if (j == 0) return 1.0;
  double prev = 1.0;
  double cur = 0.0;
  const double a = family.a, b = family.b;
  switch (family.kind) {
    case Family::Kind::HermiteProbabilists:
      cur = x;
      for (int n = 1; n < j; ++n) {
        const double next = x * cur - n * prev;
        prev = cur;
        cur = next;
      }
      return cur;
    case Family::Kind::Legendre:
      cur = x;
      for (int n = 1; n < j; ++n) {
        const double next = ((2.0 * n + 1.0) * x * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
      }
      return cur;
    case Family::Kind::Jacobi:
      cur = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
      for (int n = 1; n < j; ++n) {
        const double s = 2.0 * n + a + b;
        const double c1 = 2.0 * (n + 1.0) * (n + 1.0 + a + b) * s;
        const double c2 = (s + 1.0) * ((s + 2.0) * s * x + a * a - b * b);
        const double c3 = 2.0 * (n + a) * (n + b) * (s + 2.0);
        const double next = (c2 * cur - c3 * prev) / c1;
        prev = cur;
        cur = next;
      }
      return cur;
  }
  return 0.0;
}

/// Writes P_0(x) .. P_{out.size()-1}(x) into `out`.
inline void eval_univariate_all(const Family& family, double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  const double a = family.a, b = family.b;
  switch (family.kind) {
    case Family::Kind::HermiteProbabilists:
      out[1] = x;
      for (std::size_t n = 1; n + 1 < out.size(); ++n)
        out[n + 1] = x * out[n] - static_cast<double>(n) * out[n - 1];
      return;
    case Family::Kind::Legendre:
      out[1] = x;
      for (std::size_t n = 1; n + 1 < out.size(); ++n) {
        const double dn = static_cast<double>(n);
        out[n + 1] = ((2.0 * dn + 1.0) * x * out[n] - dn * out[n - 1]) / (dn + 1.0);
      }
      return;
    case Family::Kind::Jacobi:
      out[1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
      for (std::size_t n = 1; n + 1 < out.size(); ++n) {
        const double dn = static_cast<double>(n);
        const double s = 2.0 * dn + a + b;
        const double c1 = 2.0 * (dn + 1.0) * (dn + 1.0 + a + b) * s;
        const double c2 = (s + 1.0) * ((s + 2.0) * s * x + a * a - b * b);
        const double c3 = 2.0 * (dn + a) * (dn + b) * (s + 2.0);
        out[n + 1] = (c2 * out[n] - c3 * out[n - 1]) / c1;
      }
      return;
  }
}

/// Recurrence coefficients of the monic orthogonal polynomials under the
/// probability-normalized weight: p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1}.
/// beta_0 is the zeroth moment (1).
struct MonicRecurrence {
  std::vector<double> alpha;
  std::vector<double> beta;
};

inline MonicRecurrence monic_recurrence(const Family& family, std::size_t m) {
  MonicRecurrence rc{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  if (m == 0) return rc;
  rc.beta[0] = 1.0;
  const double a = family.a, b = family.b;
  for (std::size_t k = 0; k < m; ++k) {
    const double n = static_cast<double>(k);
    switch (family.kind) {
      case Family::Kind::HermiteProbabilists:
        if (k > 0) rc.beta[k] = n;
        break;
      case Family::Kind::Legendre:
        if (k > 0) rc.beta[k] = n * n / (4.0 * n * n - 1.0);
        break;
      case Family::Kind::Jacobi: {
        const double s = 2.0 * n + a + b;
        if (k == 0) {
          rc.alpha[k] = (b - a) / (a + b + 2.0);
        } else {
          rc.alpha[k] = (b * b - a * a) / (s * (s + 2.0));
          if (k == 1) {
            rc.beta[k] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) * (2.0 + a + b) * (3.0 + a + b));
          } else {
            rc.beta[k] =
                4.0 * n * (n + a) * (n + b) * (n + a + b) / (s * s * (s + 1.0) * (s - 1.0));
          }
        }
        break;
      }
    }
  }
  return rc;
}

}  // namespace pceuq
