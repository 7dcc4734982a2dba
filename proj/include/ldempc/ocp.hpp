#pragma once

#include "ldempc/discount.hpp"
#include "ldempc/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ldempc {

struct SolverOptions {
  double tol_stat = 1e-8;
  double tol_feas = 1e-8;
  int max_iter = 20000;  // inner iterations per start
  int max_outer = 8;
  /// Additional uniformly random input sequences tried besides the default start.
  int multistart = 0;
  std::uint64_t seed = 0;
  /// Also start from zero inputs when a warm start is supplied.
  bool cold_start = false;
  double penalty0 = 10.0;
  /// Finite state bounds are tightened by this amount inside the solver so
  /// that accepted plans lie strictly in X and closed loops do not drift out.
  double state_backoff = 1e-7;
  bool record_history = false;
};

enum class SolveStatus { Optimal, MaxIter, Infeasible };

std::string to_string(SolveStatus status);

/// Finite-horizon problem min_u sum_{k<N} w(k,N) l(x_k,u_k) from x0.
struct OcpSpec {
  Vec x0;
  std::size_t horizon = 1;
  DiscountProfile discount = DiscountProfile::linear();
  std::optional<VecSeq> warm_start;
  /// Further deterministic starts, tried after the warm start.
  std::vector<VecSeq> extra_starts;
  SolverOptions opts;
};

struct OcpSolution {
  VecSeq inputs;
  Trajectory traj;
  /// Discounted cost with the model's own stage cost.
  double value = 0.0;
  /// Same cost with the nonnegative shifted stage cost used internally.
  double shifted_value = 0.0;
  SolveStatus status = SolveStatus::Optimal;
  double stationarity_residual = 0.0;
  double violation = 0.0;
  int iterations = 0;
  /// Index of the start that produced the solution: warm start, extra starts,
  /// zero inputs, random draws, in that order of whichever are present.
  int start_index = 0;
  /// Merit history of the winning start when SolverOptions::record_history is set.
  std::vector<std::vector<double>> merit_history;
};

/// sum_{k<T} w(k,N) l(x_u(k,x0), u(k)) with T <= N and |u| >= T.
double evaluate_cost(const SystemModel& model, const Vec& x0, const VecSeq& inputs, const DiscountProfile& discount,
                     std::size_t stages, std::size_t horizon);

struct DpSolution {
  OcpSolution solution;
  /// values[k][s] = optimal cost-to-go from state s at stage k; values[N] == 0.
  std::vector<std::vector<double>> values;
};

/// Exact backward recursion on a finite graph. Ties go to the first declared
/// transition.
DpSolution solve_dp_finite(const SystemModel& model, const Vec& x0, std::size_t horizon,
                           const DiscountProfile& discount);

/// Single shooting on the stacked inputs: input box by projection, state box
/// and cost-domain guard by augmented Lagrangian, best result over all starts.
OcpSolution solve_smooth(const SystemModel& model, const OcpSpec& spec);

/// solve_dp_finite for graphs, solve_smooth otherwise.
OcpSolution solve_ocp(const SystemModel& model, const OcpSpec& spec);

/// Gradient of the (unshifted) discounted cost w.r.t. the stacked inputs,
/// computed by one backward adjoint sweep.
Vec cost_gradient(const SystemModel& model, const Vec& x0, const VecSeq& inputs, const DiscountProfile& discount);

}  // namespace ldempc
