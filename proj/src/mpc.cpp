#include "ldempc/mpc.hpp"

#include <charconv>
#include <limits>
#include <sstream>

namespace ldempc {

namespace {

constexpr double kStateTol = 1e-6;
constexpr double kPlanTol = 1e-9;

}  // namespace

std::string controller_name(const ControllerSpec& spec) {
  switch (spec.kind) {
    case ControllerKind::Discounted1Step:
      return "discounted";
    case ControllerKind::Undiscounted1Step:
      return "undiscounted";
    case ControllerKind::PStep:
      return "pstep:" + std::to_string(spec.p);
  }
  return "?";
}

ControllerSpec parse_controller(std::string_view name, std::size_t horizon) {
  ControllerSpec spec;
  spec.horizon = horizon;
  if (name == "discounted") {
    spec.kind = ControllerKind::Discounted1Step;
  } else if (name == "undiscounted") {
    spec.kind = ControllerKind::Undiscounted1Step;
  } else if (name.starts_with("pstep:")) {
    const auto digits = name.substr(6);
    std::size_t p = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), p);
    if (ec != std::errc() || end != digits.data() + digits.size() || p == 0) {
      throw Error("invalid p-step controller '" + std::string(name) + "'");
    }
    spec.kind = ControllerKind::PStep;
    spec.p = p;
  } else {
    throw Error("unknown controller '" + std::string(name) + "' (expected discounted, undiscounted or pstep:<p>)");
  }
  return spec;
}

VecSeq warm_start_plan(const OcpSolution& prev, const PeriodicOrbit* orbit_hint) {
  if (prev.inputs.empty()) {
    throw Error("cannot shift an empty plan");
  }
  VecSeq plan(prev.inputs.begin() + 1, prev.inputs.end());
  if (orbit_hint != nullptr && !orbit_hint->points.empty() && !prev.traj.states.empty()) {
    const Vec& terminal = prev.traj.states.back();
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < orbit_hint->points.size(); ++k) {
      const double d = (orbit_hint->points[k].x - terminal).norm();
      if (d < best) {
        best = d;
        nearest = k;
      }
    }
    plan.push_back(orbit_hint->points[nearest].u);
  } else {
    plan.push_back(prev.inputs.back());
  }
  return plan;
}

Controller::Controller(const SystemModel& model, ControllerSpec spec) : model_(model), spec_(std::move(spec)) {
  if (spec_.horizon == 0) {
    throw Error("controller horizon must be at least 1");
  }
  if (spec_.kind == ControllerKind::PStep && (spec_.p == 0 || spec_.p > spec_.horizon)) {
    throw Error("p-step controller needs 1 <= p <= N, got p = " + std::to_string(spec_.p));
  }
}

void Controller::reset() {
  last_.reset();
  last_age_ = 0;
  phase_ = 0;
  solves_ = 0;
}

OcpSolution Controller::solve(const Vec& x, const DiscountProfile& discount) {
  OcpSpec ocp;
  ocp.x0 = x;
  ocp.horizon = spec_.horizon;
  ocp.discount = discount;
  ocp.opts = spec_.opts;
  ocp.opts.seed = spec_.opts.seed + solves_;
  if (!model_.is_graph() && spec_.warm_start && last_ && last_->inputs.size() == spec_.horizon) {
    const PeriodicOrbit* hint = spec_.orbit_hint ? &*spec_.orbit_hint : nullptr;
    OcpSolution shifted = *last_;
    for (std::size_t i = 0; i < last_age_; ++i) {
      shifted.inputs = warm_start_plan(shifted, hint);
      shifted.traj = rollout(model_, shifted.traj.states[1], shifted.inputs);
    }
    ocp.warm_start = std::move(shifted.inputs);
    if (spec_.kind != ControllerKind::PStep && last_age_ == 1) {
      // The previous plan unshifted: optimal again whenever the applied
      // input held the state fixed.
      ocp.extra_starts.push_back(last_->inputs);
    }
  }
  ++solves_;
  OcpSolution sol = solve_ocp(model_, ocp);
  if (sol.status == SolveStatus::Infeasible) {
    std::ostringstream msg;
    msg << "optimal control problem infeasible at the current state (violation " << sol.violation << " after "
        << sol.iterations << " iterations)";
    throw ControllerError(msg.str());
  }
  last_ = sol;
  last_age_ = 0;
  return sol;
}

ControlStep Controller::control_step(const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != model_.state_dim()) {
    throw DimensionError("state has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(model_.state_dim()));
  }
  if (model_.is_graph() ? !model_.graph().state_index(x).has_value() : model_.state_violation(x) > kStateTol) {
    throw DomainError("state is outside the state constraint set");
  }

  ControlStep step;
  if (spec_.kind != ControllerKind::PStep) {
    const auto discount = spec_.kind == ControllerKind::Discounted1Step ? DiscountProfile::linear()
                                                                         : DiscountProfile::constant();
    if (last_) {
      ++last_age_;
    }
    OcpSolution sol = solve(x, discount);
    step.u = sol.inputs.front();
    step.diag.solved = true;
    step.diag.status = sol.status;
    step.diag.iterations = sol.iterations;
    step.diag.stationarity = sol.stationarity_residual;
    step.diag.violation = sol.violation;
    step.diag.plan = std::move(sol);
    return step;
  }

  if (last_) {
    ++last_age_;
  }
  if (phase_ > 0) {
    // Replay the stored plan only while the state follows its prediction.
    const Vec& predicted = last_->traj.states[phase_];
    const Vec& u = last_->inputs[phase_];
    const bool on_plan = (predicted - x).norm() <= kPlanTol * (1.0 + x.norm());
    const bool admissible = model_.is_graph()
                                ? model_.graph().find_transition(*model_.graph().state_index(x), u).has_value()
                                : model_.input_violation(u) <= kStateTol && model_.guard_violation(x, u) <= 0.0;
    if (on_plan && admissible) {
      step.u = u;
      step.diag.solved = false;
      step.diag.status = last_->status;
      phase_ = (phase_ + 1) % spec_.p;
      return step;
    }
    step.diag.replanned = true;
    phase_ = 0;
  }
  OcpSolution sol = solve(x, DiscountProfile::constant());
  step.u = sol.inputs.front();
  step.diag.solved = true;
  step.diag.status = sol.status;
  step.diag.iterations = sol.iterations;
  step.diag.stationarity = sol.stationarity_residual;
  step.diag.violation = sol.violation;
  step.diag.plan = std::move(sol);
  phase_ = (phase_ + 1) % spec_.p;
  return step;
}

}  // namespace ldempc
