#pragma once

// Multivariate total-degree orthogonal bases.
//
// Basis elements are products of per-dimension classical polynomials, indexed
// by multi-indices of total degree <= d in graded-lexicographic order: total
// degree ascending, then lexicographically ascending within one degree. Index 0
// is the constant polynomial, and truncating to total degree t keeps exactly
// the first basis_dimension(n_xi, t) elements.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pceuq/error.hpp"
#include "pceuq/germ.hpp"
#include "pceuq/quadrature.hpp"

namespace pceuq {

struct MultiIndex {
  std::vector<int> degrees;

  int total() const { return std::accumulate(degrees.begin(), degrees.end(), 0); }
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// (n_xi + d)! / (n_xi! d!), evaluated as a running binomial.
inline std::uint64_t basis_dimension(std::uint64_t n_xi, std::uint64_t d) {
  if (n_xi == 0) throw ValidationError("basis needs at least one germ dimension");
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= d; ++i) {
    r = r * (n_xi + i) / i;
    if (r > std::numeric_limits<std::uint64_t>::max())
      throw OverflowError("basis dimension for n_xi=" + std::to_string(n_xi) +
                          ", d=" + std::to_string(d) + " overflows 64 bits");
  }
  return static_cast<std::uint64_t>(r);
}

/// Largest basis build_basis will construct; larger requests are resource errors.
inline constexpr std::size_t kMaxBasisSize = 1'000'000;

class BasisSpec {
 public:
  BasisSpec(GermSpec germ, int max_degree, std::vector<MultiIndex> indices,
            std::vector<double> sq_norms)
      : germ_(std::move(germ)),
        max_degree_(max_degree),
        indices_(std::move(indices)),
        sq_norms_(std::move(sq_norms)) {}

  const GermSpec& germ() const { return germ_; }
  std::size_t n_xi() const { return germ_.n_xi(); }
  int max_degree() const { return max_degree_; }
  std::size_t size() const { return indices_.size(); }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const MultiIndex& index(std::size_t j) const { return indices_.at(j); }
  const std::vector<double>& sq_norms() const { return sq_norms_; }
  double sq_norm(std::size_t j) const { return sq_norms_.at(j); }

  /// Number of leading elements with total degree <= degree.
  std::size_t prefix_length(int degree) const {
    if (degree < 0) return 0;
    if (degree >= max_degree_) return size();
    return static_cast<std::size_t>(basis_dimension(n_xi(), static_cast<std::uint64_t>(degree)));
  }

  /// Position of the degree-one element in germ dimension `dim`. Within
  /// degree one the order is (0,..,0,1), .., (1,0,..,0).
  std::size_t linear_index(std::size_t dim) const {
    if (max_degree_ < 1 || dim >= n_xi()) throw ValidationError("no degree-one element for this dimension");
    return n_xi() - dim;
  }

  /// phi_0(xi) .. phi_{size-1}(xi) at a native-coordinate germ point.
  void evaluate(std::span<const double> xi, std::span<double> out) const {
    const std::size_t d = n_xi();
    const std::size_t stride = static_cast<std::size_t>(max_degree_) + 1;
    std::vector<double> uni(d * stride);
    for (std::size_t i = 0; i < d; ++i)
      eval_univariate_all(germ_.family(i), xi[i], std::span<double>(uni.data() + i * stride, stride));
    for (std::size_t j = 0; j < indices_.size(); ++j) {
      double v = 1.0;
      const auto& deg = indices_[j].degrees;
      for (std::size_t i = 0; i < d; ++i) v *= uni[i * stride + static_cast<std::size_t>(deg[i])];
      out[j] = v;
    }
  }

  std::vector<double> evaluate(std::span<const double> xi) const {
    std::vector<double> out(size());
    evaluate(xi, out);
    return out;
  }

  /// Same germ and degree, hence the same elements in the same order.
  bool same_as(const BasisSpec& other) const {
    return this == &other || (max_degree_ == other.max_degree_ && germ_ == other.germ_);
  }

 private:
  GermSpec germ_;
  int max_degree_;
  std::vector<MultiIndex> indices_;
  std::vector<double> sq_norms_;
};

using BasisPtr = std::shared_ptr<const BasisSpec>;

namespace detail {

// Appends all compositions of `remaining` into the trailing parts, ascending lex.
inline void append_compositions(std::vector<int>& cur, std::size_t pos, int remaining,
                                std::vector<MultiIndex>& out) {
  if (pos + 1 == cur.size()) {
    cur[pos] = remaining;
    out.push_back(MultiIndex{cur});
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    cur[pos] = k;
    append_compositions(cur, pos + 1, remaining - k, out);
  }
}

}  // namespace detail

/// Multi-indices of total degree <= d in graded-lexicographic order.
inline std::vector<MultiIndex> graded_lex_indices(std::size_t n_xi, int d) {
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(basis_dimension(n_xi, static_cast<std::uint64_t>(d))));
  std::vector<int> cur(n_xi, 0);
  for (int t = 0; t <= d; ++t) detail::append_compositions(cur, 0, t, out);
  return out;
}

/// Total-degree-d basis for `germ`. Squared norms come from per-dimension Gauss
/// rules exact to degree 2d; the tensor rule over the full germ factorizes into
/// these, so the products are the multivariate norms.
inline BasisPtr build_basis(const GermSpec& germ, int d) {
  if (d < 0) throw ValidationError("basis degree must be non-negative");
  const std::uint64_t dim = basis_dimension(germ.n_xi(), static_cast<std::uint64_t>(d));
  if (dim > kMaxBasisSize)
    throw ResourceError("basis of dimension " + std::to_string(dim) + " exceeds the cap of " +
                        std::to_string(kMaxBasisSize));

  auto indices = graded_lex_indices(germ.n_xi(), d);

  const std::size_t stride = static_cast<std::size_t>(d) + 1;
  std::vector<double> uni_norms(germ.n_xi() * stride, 0.0);
  std::vector<double> vals(stride);
  for (std::size_t i = 0; i < germ.n_xi(); ++i) {
    const QuadratureRule rule = gauss_rule(germ.family(i), d + 1);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      eval_univariate_all(germ.family(i), rule.nodes(static_cast<Eigen::Index>(k), 0), vals);
      const double w = rule.weights[static_cast<Eigen::Index>(k)];
      for (std::size_t j = 0; j < stride; ++j) uni_norms[i * stride + j] += w * vals[j] * vals[j];
    }
  }

  std::vector<double> sq_norms(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    double v = 1.0;
    for (std::size_t i = 0; i < germ.n_xi(); ++i)
      v *= uni_norms[i * stride + static_cast<std::size_t>(indices[j].degrees[i])];
    sq_norms[j] = v;
  }
  return std::make_shared<const BasisSpec>(germ, d, std::move(indices), std::move(sq_norms));
}

}  // namespace pceuq
