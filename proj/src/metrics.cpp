#include "ldempc/metrics.hpp"

#include <cmath>

namespace ldempc {

double accumulated_cost(const ClosedLoopTrace& trace, std::size_t T) {
  if (T > trace.stage_costs.size()) {
    throw Error("J_T requested for T = " + std::to_string(T) + " on a trace of length " +
                std::to_string(trace.stage_costs.size()));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < T; ++k) {
    sum += trace.stage_costs[k];
  }
  return sum;
}

double aap_estimate(const ClosedLoopTrace& trace, std::size_t p) {
  if (!trace.feasible || trace.halted_at) {
    throw Error("average performance of a halted trace is undefined");
  }
  if (p == 0 || p > trace.stage_costs.size()) {
    throw Error("average over the last " + std::to_string(p) + " steps of a trace of length " +
                std::to_string(trace.stage_costs.size()));
  }
  double sum = 0.0;
  for (std::size_t k = trace.stage_costs.size() - p; k < trace.stage_costs.size(); ++k) {
    sum += trace.stage_costs[k];
  }
  return sum / static_cast<double>(p);
}

double transient_performance(const ClosedLoopTrace& trace, std::size_t t_lo, std::size_t t_hi, double l_star) {
  if (t_lo > t_hi) {
    throw Error("transient window is empty");
  }
  if (t_hi > trace.stage_costs.size()) {
    throw Error("transient window ends after the trace");
  }
  double sum = 0.0;
  for (std::size_t T = t_lo; T <= t_hi; ++T) {
    sum += accumulated_cost(trace, T) - static_cast<double>(T) * l_star;
  }
  return sum / static_cast<double>(t_hi - t_lo + 1);
}

std::size_t turnpike_count(const OcpSolution& plan, const PeriodicOrbit& orbit, double eps) {
  std::size_t count = 0;
  for (std::size_t k = 0; k < plan.inputs.size(); ++k) {
    if (distance(plan.traj.states[k], plan.inputs[k], orbit) <= eps) {
      ++count;
    }
  }
  return count;
}

RotatedCost rotated_cost(const SystemModel& model, const StorageFunction& lambda, double l_star, const Vec& x0,
                         const VecSeq& u, const DiscountProfile& discount, std::size_t horizon) {
  if (u.size() < horizon) {
    throw Error("input sequence shorter than the horizon");
  }
  const VecSeq head(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(horizon));
  const Trajectory traj = rollout(model, x0, head);
  const auto w = discount.weights(horizon);
  std::vector<double> lam(horizon + 1);
  for (std::size_t k = 0; k <= horizon; ++k) {
    lam[k] = lambda(traj.states[k]);
    if (!std::isfinite(lam[k])) {
      throw DomainError("storage function is not finite at step " + std::to_string(k));
    }
  }

  RotatedCost out;
  double cost = 0.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    const double l = model.stage_cost(traj.states[k], head[k]);
    cost += w[k] * l;
    out.direct += w[k] * (l - l_star + lam[k] - lam[k + 1]);
  }
  double sum_w = 0.0;
  for (double wk : w) {
    sum_w += wk;
  }
  out.identity = cost - l_star * sum_w + w[0] * lam[0] - w[horizon - 1] * lam[horizon];
  for (std::size_t k = 1; k < horizon; ++k) {
    out.identity += (w[k] - w[k - 1]) * lam[k];
  }
  out.residual = std::abs(out.direct - out.identity);
  return out;
}

double feasibility_margin(const SystemModel& model, const MarginInputs& in, const Vec& x, std::size_t horizon,
                          std::size_t M, const SolverOptions& opts) {
  OcpSpec spec;
  spec.x0 = x;
  spec.horizon = horizon;
  spec.discount = DiscountProfile::linear();
  spec.opts = opts;
  const OcpSolution sol = solve_ocp(model, spec);
  if (sol.status == SolveStatus::Infeasible) {
    throw InfeasibleError("value function undefined: optimal control problem infeasible");
  }
  const double lhs = sol.value - spec.discount.weight_sum(horizon) * in.l_star + in.lambda(x) + in.lambda_bar;
  const double c = static_cast<double>(M) * (in.l_max - in.l_star) + 2.0 * in.lambda_bar +
                   in.l_star * static_cast<double>(in.p_star);
  return lhs - c;
}

DppCheck dpp_residual(const SystemModel& model, const Vec& x, std::size_t horizon, const DiscountProfile& discount,
                      const SolverOptions& opts) {
  if (horizon < 2) {
    throw Error("dynamic programming check needs N >= 2");
  }
  double factor = 1.0;
  switch (discount.kind()) {
    case DiscountProfile::Kind::Linear:
      factor = static_cast<double>(horizon - 1) / static_cast<double>(horizon);
      break;
    case DiscountProfile::Kind::Constant:
      factor = 1.0;
      break;
    case DiscountProfile::Kind::Table:
      throw Error("dynamic programming check is defined for constant and linear profiles only");
  }
  OcpSpec spec;
  spec.x0 = x;
  spec.horizon = horizon;
  spec.discount = discount;
  spec.opts = opts;
  const OcpSolution full = solve_ocp(model, spec);
  if (full.status == SolveStatus::Infeasible) {
    throw InfeasibleError("optimal control problem infeasible at the checked state");
  }
  OcpSpec tail = spec;
  tail.x0 = full.traj.states[1];
  tail.horizon = horizon - 1;
  if (!model.is_graph()) {
    tail.warm_start = VecSeq(full.inputs.begin() + 1, full.inputs.end());
    tail.opts.cold_start = true;
  }
  const OcpSolution rest = solve_ocp(model, tail);
  if (rest.status == SolveStatus::Infeasible) {
    throw InfeasibleError("tail problem infeasible");
  }
  DppCheck out;
  out.value = full.value;
  out.first_stage = model.stage_cost(x, full.inputs.front());
  out.tail = rest.value;
  out.residual = std::abs(out.value - out.first_stage - factor * out.tail);
  return out;
}

MetricsReport summarize(const ClosedLoopTrace& trace, const ReportOptions& opts) {
  MetricsReport report;
  for (std::size_t T = 0; T <= trace.stage_costs.size(); ++T) {
    report.accumulated.push_back(accumulated_cost(trace, T));
  }
  report.aap = aap_estimate(trace, opts.p_star);
  report.aap_gap = report.aap - opts.l_star;
  if (opts.t_hi <= trace.stage_costs.size()) {
    report.j_tr = transient_performance(trace, opts.t_lo, opts.t_hi, opts.l_star);
  } else {
    report.j_tr = std::nan("");
  }
  if (opts.orbit != nullptr) {
    for (double eps : opts.eps) {
      auto& counts = report.turnpike_counts[eps];
      for (const auto& d : trace.diags) {
        if (d.plan) {
          counts.push_back(turnpike_count(*d.plan, *opts.orbit, eps));
        }
      }
    }
  }
  return report;
}

}  // namespace ldempc
