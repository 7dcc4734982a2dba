#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldempc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A sequence of state or input vectors indexed by time step.
using VecSeq = std::vector<Vec>;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Vector sizes do not match the model.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A stage cost was requested outside the set where it is defined.
class DomainError : public Error {
public:
  using Error::Error;
};

/// No admissible transition / feasible solution exists.
class InfeasibleError : public Error {
public:
  using Error::Error;
};

/// Axis-aligned box [lo, hi]. Infinite bounds are allowed.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lower, Vec upper);
  static Box uniform(std::size_t dim, double lower, double upper);

  std::size_t dim() const { return static_cast<std::size_t>(lo.size()); }

  /// Largest componentwise bound excess; 0 when inside.
  double violation(const Vec& v) const;
  bool contains(const Vec& v, double tol = 0.0) const { return violation(v) <= tol; }
  Vec project(const Vec& v) const;
};

/// Stacks a sequence of equally sized vectors into one column.
Vec stack(const VecSeq& seq);
/// Inverse of stack(): splits `flat` into blocks of `block` entries.
VecSeq unstack(const Vec& flat, std::size_t block);

}  // namespace ldempc
