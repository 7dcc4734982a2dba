#pragma once

#include "ldempc/discount.hpp"
#include "ldempc/ocp.hpp"
#include "ldempc/orbit.hpp"
#include "ldempc/simulate.hpp"

#include <functional>
#include <map>
#include <vector>

namespace ldempc {

/// J_T: undiscounted sum of the first T stage costs of the trace.
double accumulated_cost(const ClosedLoopTrace& trace, std::size_t T);

/// Mean of the last p stage costs, the estimate of the asymptotic average
/// performance. Throws on halted or too short traces.
double aap_estimate(const ClosedLoopTrace& trace, std::size_t p);

/// Mean over T in [t_lo, t_hi] of J_T - T * l_star.
double transient_performance(const ClosedLoopTrace& trace, std::size_t t_lo, std::size_t t_hi, double l_star);

/// Number of stages k < N whose pair (x_k, u_k) lies within eps of the orbit.
std::size_t turnpike_count(const OcpSolution& plan, const PeriodicOrbit& orbit, double eps);

using StorageFunction = std::function<double(const Vec&)>;

struct RotatedCost {
  /// sum_k w(k,N) (l - l* + lambda(x_k) - lambda(x_{k+1})).
  double direct = 0.0;
  /// The same quantity from J_N, l* and lambda along the trajectory only.
  double identity = 0.0;
  double residual = 0.0;
};

/// Rotated cost functional of the input sequence u from x0, evaluated stage by
/// stage and through the summation-by-parts identity. For the linear profile
/// the identity reads J - (N+1)/2 l* + lambda(x0) - (1/N) sum_{k=1}^N lambda(x_k).
RotatedCost rotated_cost(const SystemModel& model, const StorageFunction& lambda, double l_star, const Vec& x0,
                         const VecSeq& u, const DiscountProfile& discount, std::size_t horizon);

struct MarginInputs {
  StorageFunction lambda;
  double lambda_bar = 0.0;
  double l_star = 0.0;
  std::size_t p_star = 1;
  double l_max = 0.0;
};

/// V_N(x) - (N+1)/2 l* + lambda(x) + lambda_bar - C(M) with
/// C(M) = M (l_max - l*) + 2 lambda_bar + l* p*, using the linear profile.
/// Negative values indicate that x lies in the corresponding sublevel set.
double feasibility_margin(const SystemModel& model, const MarginInputs& in, const Vec& x, std::size_t horizon,
                          std::size_t M, const SolverOptions& opts = {});

struct DppCheck {
  double value = 0.0;       // V_N(x)
  double first_stage = 0.0; // l(x, u*(0))
  double tail = 0.0;        // V_{N-1}(f(x, u*(0)))
  double residual = 0.0;
};

/// |V_N(x) - l(x,u*(0)) - c_N V_{N-1}(f(x,u*(0)))| with c_N = (N-1)/N for the
/// linear and 1 for the constant profile. Needs N >= 2. Smooth tails are
/// solved from the shifted optimal plan plus the multistarts in `opts`.
DppCheck dpp_residual(const SystemModel& model, const Vec& x, std::size_t horizon, const DiscountProfile& discount,
                      const SolverOptions& opts = {});

struct MetricsReport {
  std::vector<double> accumulated;  // J_T for T = 0..length
  double aap = 0.0;
  double aap_gap = 0.0;
  double j_tr = 0.0;
  /// eps -> turnpike count of each stored open-loop plan.
  std::map<double, std::vector<std::size_t>> turnpike_counts;
};

struct ReportOptions {
  double l_star = 0.0;
  std::size_t p_star = 1;
  std::size_t t_lo = 25;
  std::size_t t_hi = 30;
  std::vector<double> eps = {0.01, 0.05, 0.1};
  const PeriodicOrbit* orbit = nullptr;  // needed for turnpike counts
};

MetricsReport summarize(const ClosedLoopTrace& trace, const ReportOptions& opts);

}  // namespace ldempc
