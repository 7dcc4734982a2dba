#pragma once

#include "ldempc/types.hpp"

#include <cstddef>
#include <vector>

namespace ldempc {

/// Nonlinear program
///
///   min f(z)  s.t.  lo <= z <= hi,  c(z) <= 0,  h(z) = 0.
///
/// The box is enforced by projection, c and h through an augmented
/// Lagrangian. Gradients are requested as vector-Jacobian products so that
/// shooting formulations can use one adjoint sweep.
class ConstrainedProblem {
public:
  virtual ~ConstrainedProblem() = default;

  virtual std::size_t num_vars() const = 0;
  virtual std::size_t num_ineq() const = 0;
  virtual std::size_t num_eq() const = 0;
  virtual const Box& bounds() const = 0;

  /// Fills f, c and h. Returns false when z lies outside the domain of f.
  virtual bool evaluate(const Vec& z, double& f, Vec& c, Vec& h) const = 0;
  /// grad f(z) + Jc(z)^T yc + Jh(z)^T yh.
  virtual void gradient(const Vec& z, const Vec& yc, const Vec& yh, Vec& g) const = 0;
};

/// Method used for the box-constrained inner minimizations.
enum class InnerSolver {
  /// Two-metric projected Newton: finite-difference Hessian on the free
  /// variables, scaled gradient on the bound-active ones.
  ProjectedNewton,
  /// Projected gradient with Barzilai-Borwein trial steps.
  SpectralGradient,
};

struct AugLagOptions {
  InnerSolver inner = InnerSolver::ProjectedNewton;
  double tol_stat = 1e-8;
  double tol_feas = 1e-8;
  int max_iter = 20000;  // inner iterations over all rounds
  int max_outer = 8;
  double penalty0 = 10.0;
  double penalty_growth = 10.0;
  double armijo = 1e-4;
  bool record_history = false;
};

struct AugLagResult {
  Vec z;
  double objective = 0.0;
  double violation = 0.0;
  /// Projected-gradient norm of the Lagrangian at the final multipliers.
  double stationarity = 0.0;
  int iterations = 0;
  int outer_rounds = 0;
  bool converged = false;
  /// False when the start point lies outside the domain of f.
  bool domain_ok = true;
  Vec mult_ineq;
  Vec mult_eq;
  /// Merit value after every accepted inner step, one list per round.
  std::vector<std::vector<double>> merit_history;
};

/// Largest constraint violation max(max_i c_i, max_j |h_j|, 0).
double constraint_violation(const Vec& c, const Vec& h);

/// Augmented-Lagrangian method. Every inner step is accepted by monotone
/// Armijo backtracking (halving) on the merit function, so the merit is
/// nonincreasing within a round. `z0` is projected onto the box first.
AugLagResult solve_auglag(const ConstrainedProblem& problem, const Vec& z0, const AugLagOptions& opts);

}  // namespace ldempc
