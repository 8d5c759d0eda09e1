#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pceuq {

/// Base of everything the library throws. `kind()` is a stable machine-readable tag.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Malformed input: bad JSON, unknown keys, inconsistent dimensions.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class OverflowError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "overflow"; }
};

/// A size cap (tensor grid, enlarged basis) would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "resource"; }
};

/// An adaptive computation did not reach its tolerance.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double previous, double last)
      : Error(what), previous_(previous), last_(last) {}
  const char* kind() const noexcept override { return "accuracy"; }
  double previous_estimate() const noexcept { return previous_; }
  double last_estimate() const noexcept { return last_; }

 private:
  double previous_;
  double last_;
};

/// A function produced a non-finite value at a quadrature node.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::vector<double> node)
      : Error(what), node_(std::move(node)) {}
  const char* kind() const noexcept override { return "evaluation"; }
  const std::vector<double>& node() const noexcept { return node_; }

 private:
  std::vector<double> node_;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "construction"; }
};

/// Problem data infeasible. The certificate y >= 0 satisfies A^T y = 0 and z2^T y > 0.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::vector<double> certificate)
      : Error(what), certificate_(std::move(certificate)) {}
  const char* kind() const noexcept override { return "infeasible"; }
  const std::vector<double>& certificate() const noexcept { return certificate_; }

 private:
  std::vector<double> certificate_;
};

/// Active constraint gradients are linearly dependent (LICQ violated).
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::vector<double> realization = {})
      : Error(what), realization_(std::move(realization)) {}
  const char* kind() const noexcept override { return "degeneracy"; }
  const std::vector<double>& realization() const noexcept { return realization_; }

 private:
  std::vector<double> realization_;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unsupported"; }
};

class SynthesisError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "synthesis"; }
};

}  // namespace pceuq
