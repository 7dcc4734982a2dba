#include "ldempc/ocp.hpp"

#include "ldempc/auglag.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ldempc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Stage cost of a smooth model without exceptions: +inf outside the domain.
double smooth_cost(const SystemModel& model, const Vec& x, const Vec& u) {
  const auto& s = model.smooth();
  if (s.guard && !(s.guard(x, u) > 0.0)) {
    return kInf;
  }
  const double v = s.cost(x, u);
  return std::isfinite(v) ? v - model.cost_offset() : kInf;
}

/// Single-shooting transcription. Variables are the stacked inputs
/// (u_0, ..., u_{N-1}); inequalities are the finite state bounds of
/// x_1..x_N followed by margin - g(x_k,u_k) <= 0 for k < N when the model has
/// a guard.
class ShootingProblem final : public ConstrainedProblem {
public:
  ShootingProblem(const SystemModel& model, Vec x0, std::vector<double> weights, double backoff = 0.0)
      : model_(model), x0_(std::move(x0)), w_(std::move(weights)), n_(model.state_dim()), m_(model.input_dim()) {
    const auto& s = model_.smooth();
    const auto horizon = w_.size();
    Vec lo(static_cast<Eigen::Index>(horizon * m_));
    Vec hi(lo.size());
    for (std::size_t k = 0; k < horizon; ++k) {
      lo.segment(static_cast<Eigen::Index>(k * m_), static_cast<Eigen::Index>(m_)) = s.u_bounds.lo;
      hi.segment(static_cast<Eigen::Index>(k * m_), static_cast<Eigen::Index>(m_)) = s.u_bounds.hi;
    }
    box_ = Box(lo, hi);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      if (std::isfinite(s.x_bounds.hi[e])) {
        rows_.push_back({i, +1.0, s.x_bounds.hi[e] - backoff});
      }
      if (std::isfinite(s.x_bounds.lo[e])) {
        rows_.push_back({i, -1.0, s.x_bounds.lo[e] + backoff});
      }
    }
  }

  std::size_t num_vars() const override { return w_.size() * m_; }
  std::size_t num_ineq() const override { return w_.size() * (rows_.size() + (model_.has_guard() ? 1 : 0)); }
  std::size_t num_eq() const override { return 0; }
  const Box& bounds() const override { return box_; }

  bool evaluate(const Vec& z, double& f, Vec& c, Vec& h) const override {
    const auto horizon = w_.size();
    const bool guarded = model_.has_guard();
    c.resize(static_cast<Eigen::Index>(num_ineq()));
    h.resize(0);
    f = 0.0;
    Vec x = x0_;
    Eigen::Index row = 0;
    const Eigen::Index guard_base = static_cast<Eigen::Index>(horizon * rows_.size());
    for (std::size_t k = 0; k < horizon; ++k) {
      const Vec u = z.segment(static_cast<Eigen::Index>(k * m_), static_cast<Eigen::Index>(m_));
      if (guarded) {
        const double g = model_.smooth().guard(x, u);
        c[guard_base + static_cast<Eigen::Index>(k)] = std::isfinite(g) ? model_.guard_margin() - g : kInf;
      }
      f += w_[k] * smooth_cost(model_, x, u);
      x = model_.smooth().dynamics(x, u);
      for (const auto& r : rows_) {
        c[row++] = r.sign * (x[static_cast<Eigen::Index>(r.component)] - r.bound);
      }
    }
    return std::isfinite(f);
  }

  void gradient(const Vec& z, const Vec& yc, const Vec&, Vec& g) const override {
    const auto horizon = w_.size();
    const bool guarded = model_.has_guard();
    VecSeq xs(horizon + 1);
    VecSeq us(horizon);
    xs[0] = x0_;
    for (std::size_t k = 0; k < horizon; ++k) {
      us[k] = z.segment(static_cast<Eigen::Index>(k * m_), static_cast<Eigen::Index>(m_));
      xs[k + 1] = model_.smooth().dynamics(xs[k], us[k]);
    }
    g.resize(z.size());
    Vec costate = Vec::Zero(static_cast<Eigen::Index>(n_));
    Mat dfdx, dfdu;
    Vec lx, lu, gx, gu;
    const Eigen::Index guard_base = static_cast<Eigen::Index>(horizon * rows_.size());
    for (std::size_t k = horizon; k-- > 0;) {
      // State-bound multipliers act on x_{k+1}.
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        const double y = yc[static_cast<Eigen::Index>(k * rows_.size() + r)];
        costate[static_cast<Eigen::Index>(rows_[r].component)] += rows_[r].sign * y;
      }
      model_.linearize(xs[k], us[k], dfdx, dfdu);
      model_.cost_gradient(xs[k], us[k], lx, lu);
      Vec du = w_[k] * lu + dfdu.transpose() * costate;
      Vec dx = w_[k] * lx + dfdx.transpose() * costate;
      if (guarded) {
        const double y = yc[guard_base + static_cast<Eigen::Index>(k)];
        if (y != 0.0) {
          model_.guard_gradient(xs[k], us[k], gx, gu);
          du -= y * gu;
          dx -= y * gx;
        }
      }
      g.segment(static_cast<Eigen::Index>(k * m_), static_cast<Eigen::Index>(m_)) = du;
      costate = dx;
    }
  }

private:
  struct BoundRow {
    std::size_t component;
    double sign;  // +1: x <= bound, -1: x >= bound
    double bound;
  };

  const SystemModel& model_;
  Vec x0_;
  std::vector<double> w_;
  std::size_t n_;
  std::size_t m_;
  Box box_;
  std::vector<BoundRow> rows_;
};

void validate_spec(const SystemModel& model, const OcpSpec& spec) {
  if (spec.horizon == 0) {
    throw Error("horizon must be at least 1");
  }
  if (static_cast<std::size_t>(spec.x0.size()) != model.state_dim()) {
    throw DimensionError("initial state has dimension " + std::to_string(spec.x0.size()) + ", expected " +
                         std::to_string(model.state_dim()));
  }
  auto check_start = [&](const VecSeq& start) {
    if (start.size() != spec.horizon) {
      throw DimensionError("start sequence has length " + std::to_string(start.size()) + ", expected " +
                           std::to_string(spec.horizon));
    }
    for (const auto& u : start) {
      if (static_cast<std::size_t>(u.size()) != model.input_dim()) {
        throw DimensionError("start input has the wrong dimension");
      }
    }
  };
  if (spec.warm_start) {
    check_start(*spec.warm_start);
  }
  for (const auto& start : spec.extra_starts) {
    check_start(start);
  }
}

/// Uniform input draws, stage by stage, rejecting draws outside the cost domain.
Vec random_inputs(const SystemModel& model, const Vec& x0, std::size_t horizon, std::mt19937_64& rng) {
  const auto& s = model.smooth();
  const auto m = static_cast<Eigen::Index>(s.m);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec z(static_cast<Eigen::Index>(horizon) * m);
  Vec x = x0;
  Vec u(m);
  for (std::size_t k = 0; k < horizon; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < 50 && !ok; ++attempt) {
      for (Eigen::Index j = 0; j < m; ++j) {
        u[j] = s.u_bounds.lo[j] + unit(rng) * (s.u_bounds.hi[j] - s.u_bounds.lo[j]);
      }
      ok = std::isfinite(smooth_cost(model, x, u)) && (!s.guard || s.guard(x, u) >= s.guard_margin);
    }
    if (!ok) {
      u = s.u_bounds.lo;
    }
    z.segment(static_cast<Eigen::Index>(k) * m, m) = u;
    x = s.dynamics(x, u);
  }
  return z;
}

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::MaxIter:
      return "max_iter";
    case SolveStatus::Infeasible:
      return "infeasible";
  }
  return "?";
}

double evaluate_cost(const SystemModel& model, const Vec& x0, const VecSeq& inputs, const DiscountProfile& discount,
                     std::size_t stages, std::size_t horizon) {
  if (stages > horizon) {
    throw Error("cost evaluated over " + std::to_string(stages) + " stages with horizon " + std::to_string(horizon));
  }
  if (inputs.size() < stages) {
    throw Error("input sequence shorter than the number of evaluated stages");
  }
  double sum = 0.0;
  Vec x = x0;
  for (std::size_t k = 0; k < stages; ++k) {
    sum += discount.weight(k, horizon) * model.stage_cost(x, inputs[k]);
    if (k + 1 < stages) {
      x = model.next_state(x, inputs[k]);
    }
  }
  return sum;
}

DpSolution solve_dp_finite(const SystemModel& model, const Vec& x0, std::size_t horizon,
                           const DiscountProfile& discount) {
  const FiniteGraph& g = model.graph();
  if (horizon == 0) {
    throw Error("horizon must be at least 1");
  }
  const auto start = g.state_index(x0);
  if (!start) {
    throw Error("initial state is not a vertex of graph '" + model.name() + "'");
  }
  const std::size_t num_states = g.states().size();
  const auto w = discount.weights(horizon);

  DpSolution out;
  out.values.assign(horizon + 1, std::vector<double>(num_states, 0.0));
  std::vector<std::vector<std::size_t>> choice(horizon, std::vector<std::size_t>(num_states, 0));
  for (std::size_t k = horizon; k-- > 0;) {
    for (std::size_t s = 0; s < num_states; ++s) {
      double best = kInf;
      for (auto t : g.outgoing(s)) {
        const auto& tr = g.transitions()[t];
        const double v = w[k] * (tr.cost - model.cost_offset()) + out.values[k + 1][tr.to];
        if (v < best) {
          best = v;
          choice[k][s] = t;
        }
      }
      out.values[k][s] = best;
    }
  }

  OcpSolution& sol = out.solution;
  if (!std::isfinite(out.values[0][*start])) {
    sol.status = SolveStatus::Infeasible;
    sol.value = kInf;
    sol.shifted_value = kInf;
    sol.traj.states = {x0};
    return out;
  }
  std::size_t s = *start;
  for (std::size_t k = 0; k < horizon; ++k) {
    const auto& tr = g.transitions()[choice[k][s]];
    sol.inputs.push_back(tr.input);
    s = tr.to;
  }
  sol.traj = rollout(model, x0, sol.inputs);
  sol.value = evaluate_cost(model, x0, sol.inputs, discount, horizon, horizon);
  sol.shifted_value = sol.value - model.cost_floor() * discount.weight_sum(horizon);
  sol.status = SolveStatus::Optimal;
  return out;
}

OcpSolution solve_smooth(const SystemModel& model, const OcpSpec& spec) {
  validate_spec(model, spec);
  const auto& opts = spec.opts;
  const std::size_t horizon = spec.horizon;
  const auto m = static_cast<Eigen::Index>(model.input_dim());
  const double floor = model.cost_floor();
  const SystemModel shifted = model.with_cost_offset(model.cost_offset() + floor);
  const ShootingProblem problem(shifted, spec.x0, spec.discount.weights(horizon), opts.state_backoff);

  std::vector<Vec> starts;
  if (spec.warm_start) {
    starts.push_back(stack(*spec.warm_start));
  }
  for (const auto& start : spec.extra_starts) {
    starts.push_back(stack(start));
  }
  if (!spec.warm_start || opts.cold_start) {
    starts.push_back(problem.bounds().project(Vec::Zero(static_cast<Eigen::Index>(horizon) * m)));
  }
  std::mt19937_64 rng(opts.seed);
  for (int r = 0; r < opts.multistart; ++r) {
    starts.push_back(random_inputs(shifted, spec.x0, horizon, rng));
  }

  AugLagOptions al;
  al.tol_stat = opts.tol_stat;
  al.tol_feas = opts.tol_feas;
  al.max_iter = opts.max_iter;
  al.max_outer = opts.max_outer;
  al.penalty0 = opts.penalty0;
  al.record_history = opts.record_history;

  std::optional<AugLagResult> best;
  int best_index = -1;
  int total_iterations = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    AugLagResult r = solve_auglag(problem, starts[i], al);
    total_iterations += r.iterations;
    if (!r.domain_ok) {
      continue;
    }
    // Judge feasibility against the untightened constraints.
    const auto inputs = unstack(r.z, static_cast<std::size_t>(m));
    r.violation = check_feasible(model, rollout(model, spec.x0, inputs), 0.0).worst_violation;
    bool better = false;
    if (!best) {
      better = true;
    } else {
      const bool feasible = r.violation <= opts.tol_feas;
      const bool best_feasible = best->violation <= opts.tol_feas;
      if (feasible != best_feasible) {
        better = feasible;
      } else if (feasible) {
        better = r.objective < best->objective;
      } else {
        better = r.violation < best->violation;
      }
    }
    if (better) {
      best = std::move(r);
      best_index = static_cast<int>(i);
    }
  }

  OcpSolution sol;
  sol.iterations = total_iterations;
  if (!best) {
    sol.inputs = unstack(starts.front(), static_cast<std::size_t>(m));
    sol.traj = rollout(model, spec.x0, sol.inputs);
    sol.status = SolveStatus::Infeasible;
    sol.value = kInf;
    sol.shifted_value = kInf;
    sol.violation = kInf;
    sol.stationarity_residual = kInf;
    return sol;
  }
  sol.inputs = unstack(best->z, static_cast<std::size_t>(m));
  sol.traj = rollout(model, spec.x0, sol.inputs);
  sol.start_index = best_index;
  sol.violation = best->violation;
  sol.stationarity_residual = best->stationarity;
  sol.merit_history = std::move(best->merit_history);
  double value = 0.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    value += spec.discount.weight(k, horizon) * smooth_cost(model, sol.traj.states[k], sol.inputs[k]);
  }
  sol.value = value;
  sol.shifted_value = best->objective;
  if (best->violation > opts.tol_feas) {
    sol.status = SolveStatus::Infeasible;
  } else if (best->stationarity <= opts.tol_stat) {
    sol.status = SolveStatus::Optimal;
  } else {
    sol.status = SolveStatus::MaxIter;
  }
  return sol;
}

OcpSolution solve_ocp(const SystemModel& model, const OcpSpec& spec) {
  if (model.is_graph()) {
    return solve_dp_finite(model, spec.x0, spec.horizon, spec.discount).solution;
  }
  return solve_smooth(model, spec);
}

Vec cost_gradient(const SystemModel& model, const Vec& x0, const VecSeq& inputs, const DiscountProfile& discount) {
  const ShootingProblem problem(model, x0, discount.weights(inputs.size()));
  const Vec z = stack(inputs);
  Vec g;
  problem.gradient(z, Vec::Zero(static_cast<Eigen::Index>(problem.num_ineq())), Vec(), g);
  return g;
}

}  // namespace ldempc
