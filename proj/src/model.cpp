#include "ldempc/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <queue>
#include <utility>

namespace ldempc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(const Vec& v, std::size_t dim, const char* what) {
  if (static_cast<std::size_t>(v.size()) != dim) {
    throw DimensionError(std::string(what) + " has dimension " + std::to_string(v.size()) + ", expected " +
                         std::to_string(dim));
  }
}

double fd_step(double z) { return 1e-6 * (1.0 + std::abs(z)); }

}  // namespace

// ---------------------------------------------------------------------------
// FiniteGraph

FiniteGraph::FiniteGraph(std::vector<GraphState> states, std::vector<GraphTransition> transitions)
    : states_(std::move(states)), transitions_(std::move(transitions)), outgoing_(states_.size()) {
  if (states_.empty()) {
    throw Error("finite graph needs at least one state");
  }
  const auto sdim = states_.front().embedding.size();
  for (const auto& s : states_) {
    if (s.embedding.size() != sdim) {
      throw DimensionError("state '" + s.label + "' has an embedding of different dimension");
    }
  }
  if (transitions_.empty()) {
    throw Error("finite graph needs at least one transition");
  }
  const auto idim = transitions_.front().input.size();
  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    const auto& tr = transitions_[t];
    if (tr.from >= states_.size() || tr.to >= states_.size()) {
      throw Error("transition " + std::to_string(t) + " references an unknown state");
    }
    if (tr.input.size() != idim) {
      throw DimensionError("transition " + std::to_string(t) + " has an input embedding of different dimension");
    }
    if (!std::isfinite(tr.cost)) {
      throw Error("transition " + std::to_string(t) + " has a non-finite cost");
    }
    outgoing_[tr.from].push_back(t);
  }
  for (std::size_t s = 0; s < states_.size(); ++s) {
    if (outgoing_[s].empty()) {
      throw Error("state '" + states_[s].label + "' has no outgoing transition");
    }
  }
}

std::size_t FiniteGraph::state_dim() const { return static_cast<std::size_t>(states_.front().embedding.size()); }

std::size_t FiniteGraph::input_dim() const { return static_cast<std::size_t>(transitions_.front().input.size()); }

std::optional<std::size_t> FiniteGraph::state_index(const Vec& x) const {
  if (static_cast<std::size_t>(x.size()) != state_dim()) {
    return std::nullopt;
  }
  for (std::size_t s = 0; s < states_.size(); ++s) {
    if (states_[s].embedding == x) {
      return s;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> FiniteGraph::state_index(const std::string& label) const {
  for (std::size_t s = 0; s < states_.size(); ++s) {
    if (states_[s].label == label) {
      return s;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> FiniteGraph::find_transition(std::size_t state, const Vec& u) const {
  for (auto t : outgoing_.at(state)) {
    if (transitions_[t].input.size() == u.size() && transitions_[t].input == u) {
      return t;
    }
  }
  return std::nullopt;
}

double FiniteGraph::state_distance(const Vec& x) const {
  double best = kInf;
  for (const auto& s : states_) {
    best = std::min(best, (s.embedding - x).norm());
  }
  return best;
}

double FiniteGraph::pair_distance(const Vec& x, const Vec& u) const {
  double best = kInf;
  for (const auto& tr : transitions_) {
    const double dx = (states_[tr.from].embedding - x).squaredNorm();
    const double du = (tr.input - u).squaredNorm();
    best = std::min(best, std::sqrt(dx + du));
  }
  return best;
}

// ---------------------------------------------------------------------------
// SystemModel

struct SystemModel::Bounds {
  std::once_flag once;
  double floor = 0.0;
  double ceiling = 0.0;
  std::exception_ptr error;
};

namespace {

void validate(const SmoothSystem& s) {
  if (s.n == 0 || s.m == 0) {
    throw DimensionError("smooth system needs positive state and input dimensions");
  }
  if (!s.dynamics || !s.cost) {
    throw Error("smooth system needs dynamics and cost callbacks");
  }
  if (s.x_bounds.dim() != s.n || s.u_bounds.dim() != s.m) {
    throw DimensionError("constraint boxes do not match the system dimensions");
  }
  // Box's constructor already rejects lo > hi; boxes assigned field-wise are checked here.
  for (std::size_t i = 0; i < s.n; ++i) {
    if (s.x_bounds.lo[static_cast<Eigen::Index>(i)] > s.x_bounds.hi[static_cast<Eigen::Index>(i)]) {
      throw Error("state box lower bound exceeds upper bound");
    }
  }
  for (std::size_t i = 0; i < s.m; ++i) {
    if (s.u_bounds.lo[static_cast<Eigen::Index>(i)] > s.u_bounds.hi[static_cast<Eigen::Index>(i)]) {
      throw Error("input box lower bound exceeds upper bound");
    }
  }
}

}  // namespace

SystemModel::SystemModel(std::string name, FiniteGraph graph)
    : name_(std::move(name)), def_(std::move(graph)), bounds_(std::make_shared<Bounds>()) {}

SystemModel::SystemModel(std::string name, SmoothSystem system)
    : name_(std::move(name)), def_(std::move(system)), bounds_(std::make_shared<Bounds>()) {
  validate(std::get<SmoothSystem>(def_));
}

SystemModel::Variant SystemModel::variant() const {
  return std::holds_alternative<FiniteGraph>(def_) ? Variant::FiniteGraph : Variant::Smooth;
}

const FiniteGraph& SystemModel::graph() const {
  if (!is_graph()) {
    throw Error("model '" + name_ + "' is not a finite graph");
  }
  return std::get<FiniteGraph>(def_);
}

const SmoothSystem& SystemModel::smooth() const {
  if (is_graph()) {
    throw Error("model '" + name_ + "' is not a smooth system");
  }
  return std::get<SmoothSystem>(def_);
}

std::size_t SystemModel::state_dim() const { return is_graph() ? graph().state_dim() : smooth().n; }

std::size_t SystemModel::input_dim() const { return is_graph() ? graph().input_dim() : smooth().m; }

Vec SystemModel::next_state(const Vec& x, const Vec& u) const {
  require_dim(x, state_dim(), "state");
  require_dim(u, input_dim(), "input");
  if (is_graph()) {
    const auto& g = graph();
    const auto s = g.state_index(x);
    if (!s) {
      throw Error("state is not a vertex of graph '" + name_ + "'");
    }
    const auto t = g.find_transition(*s, u);
    if (!t) {
      throw InfeasibleError("no transition with the given input from state '" + g.states()[*s].label + "'");
    }
    return g.states()[g.transitions()[*t].to].embedding;
  }
  return smooth().dynamics(x, u);
}

double SystemModel::stage_cost(const Vec& x, const Vec& u) const {
  require_dim(x, state_dim(), "state");
  require_dim(u, input_dim(), "input");
  if (is_graph()) {
    const auto& g = graph();
    const auto s = g.state_index(x);
    const auto t = s ? g.find_transition(*s, u) : std::nullopt;
    if (!t) {
      throw DomainError("stage cost undefined: (x,u) is not a transition of graph '" + name_ + "'");
    }
    return g.transitions()[*t].cost - cost_offset_;
  }
  const auto& s = smooth();
  if (s.guard && !(s.guard(x, u) > 0.0)) {
    throw DomainError("stage cost undefined: guard is not positive");
  }
  const double v = s.cost(x, u);
  if (!std::isfinite(v)) {
    throw DomainError("stage cost undefined: cost evaluates to a non-finite value");
  }
  return v - cost_offset_;
}

double SystemModel::stage_cost_or_inf(const Vec& x, const Vec& u) const noexcept {
  try {
    return stage_cost(x, u);
  } catch (const std::exception&) {
    return kInf;
  }
}

SystemModel SystemModel::with_cost_offset(double offset) const {
  // The cached bounds refer to the unshifted cost and stay shared.
  SystemModel copy = *this;
  copy.cost_offset_ = offset;
  return copy;
}

bool SystemModel::has_guard() const { return !is_graph() && static_cast<bool>(smooth().guard); }

double SystemModel::guard_margin() const { return has_guard() ? smooth().guard_margin : 0.0; }

double SystemModel::guard_value(const Vec& x, const Vec& u) const {
  if (!has_guard()) {
    return kInf;
  }
  return smooth().guard(x, u);
}

double SystemModel::state_violation(const Vec& x) const {
  require_dim(x, state_dim(), "state");
  return is_graph() ? graph().state_distance(x) : smooth().x_bounds.violation(x);
}

double SystemModel::input_violation(const Vec& u) const {
  require_dim(u, input_dim(), "input");
  if (is_graph()) {
    double best = kInf;
    for (const auto& tr : graph().transitions()) {
      best = std::min(best, (tr.input - u).norm());
    }
    return best;
  }
  return smooth().u_bounds.violation(u);
}

double SystemModel::guard_violation(const Vec& x, const Vec& u) const {
  if (!has_guard()) {
    return 0.0;
  }
  const double g = smooth().guard(x, u);
  if (!std::isfinite(g)) {
    return kInf;
  }
  return std::max(0.0, smooth().guard_margin - g);
}

void SystemModel::linearize(const Vec& x, const Vec& u, Mat& dfdx, Mat& dfdu) const {
  const auto& s = smooth();
  if (s.dynamics_jacobian) {
    s.dynamics_jacobian(x, u, dfdx, dfdu);
    return;
  }
  const auto n = static_cast<Eigen::Index>(s.n);
  const auto m = static_cast<Eigen::Index>(s.m);
  dfdx.resize(n, n);
  dfdu.resize(n, m);
  Vec xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    const Vec fp = s.dynamics(xp, u);
    xp[i] = x[i] - h;
    const Vec fm = s.dynamics(xp, u);
    xp[i] = x[i];
    dfdx.col(i) = (fp - fm) / (2.0 * h);
  }
  Vec up = u;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double h = fd_step(u[j]);
    up[j] = u[j] + h;
    const Vec fp = s.dynamics(x, up);
    up[j] = u[j] - h;
    const Vec fm = s.dynamics(x, up);
    up[j] = u[j];
    dfdu.col(j) = (fp - fm) / (2.0 * h);
  }
}

namespace {

void fd_gradient(const SmoothSystem::Scalar& fn, const Vec& x, const Vec& u, Vec& dx, Vec& du) {
  dx.resize(x.size());
  du.resize(u.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    const double fp = fn(xp, u);
    xp[i] = x[i] - h;
    const double fm = fn(xp, u);
    xp[i] = x[i];
    dx[i] = (fp - fm) / (2.0 * h);
  }
  Vec up = u;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double h = fd_step(u[j]);
    up[j] = u[j] + h;
    const double fp = fn(x, up);
    up[j] = u[j] - h;
    const double fm = fn(x, up);
    up[j] = u[j];
    du[j] = (fp - fm) / (2.0 * h);
  }
}

}  // namespace

void SystemModel::cost_gradient(const Vec& x, const Vec& u, Vec& dx, Vec& du) const {
  const auto& s = smooth();
  if (s.cost_gradient) {
    s.cost_gradient(x, u, dx, du);
  } else {
    fd_gradient(s.cost, x, u, dx, du);
  }
}

void SystemModel::guard_gradient(const Vec& x, const Vec& u, Vec& dx, Vec& du) const {
  const auto& s = smooth();
  if (!s.guard) {
    dx = Vec::Zero(x.size());
    du = Vec::Zero(u.size());
  } else if (s.guard_gradient) {
    s.guard_gradient(x, u, dx, du);
  } else {
    fd_gradient(s.guard, x, u, dx, du);
  }
}

namespace {

struct Sample {
  double value;
  Vec z;
  bool operator<(const Sample& other) const { return value < other.value; }
};

/// Projected-gradient refinement of min l(z) over the (x,u) box with the guard
/// kept as a hard constraint.
Sample refine(const SmoothSystem& s, Sample start, const Box& box, int steps) {
  const auto n = static_cast<Eigen::Index>(s.n);
  const auto m = static_cast<Eigen::Index>(s.m);
  auto value = [&](const Vec& z) {
    const Vec x = z.head(n);
    const Vec u = z.tail(m);
    if (s.guard && !(s.guard(x, u) >= s.guard_margin)) {
      return kInf;
    }
    const double v = s.cost(x, u);
    return std::isfinite(v) ? v : kInf;
  };
  const double width = (box.hi - box.lo).maxCoeff();
  double alpha = -1.0;
  Vec gx, gu, g(n + m);
  for (int it = 0; it < steps; ++it) {
    const Vec x = start.z.head(n);
    const Vec u = start.z.tail(m);
    if (s.cost_gradient) {
      s.cost_gradient(x, u, gx, gu);
    } else {
      fd_gradient(s.cost, x, u, gx, gu);
    }
    g << gx, gu;
    const double gmax = g.lpNorm<Eigen::Infinity>();
    if (!(gmax > 0.0) || !std::isfinite(gmax)) {
      break;
    }
    if (alpha < 0.0) {
      alpha = width / gmax;
    }
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const Vec trial = box.project(start.z - alpha * g);
      const Vec d = trial - start.z;
      if (d.lpNorm<Eigen::Infinity>() == 0.0) {
        break;
      }
      const double v = value(trial);
      if (v <= start.value + 1e-4 * g.dot(d)) {
        start.value = v;
        start.z = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      break;
    }
    alpha *= 2.0;
  }
  return start;
}

/// Dense grid plus local descent over the feasible (x,u) box: returns
/// {min, max} of the stage cost.
std::pair<double, double> sample_cost_range(const SmoothSystem& s) {
  const std::size_t dim = s.n + s.m;
  Vec lo(static_cast<Eigen::Index>(dim));
  Vec hi(static_cast<Eigen::Index>(dim));
  lo << s.x_bounds.lo, s.u_bounds.lo;
  hi << s.x_bounds.hi, s.u_bounds.hi;
  const Box box(lo, hi);
  if (!box.lo.allFinite() || !box.hi.allFinite()) {
    throw Error("cost range sampling needs finite state and input boxes");
  }
  // 64 points per axis up to four dimensions; coarser beyond that.
  constexpr double kBudget = 64.0 * 64.0 * 64.0 * 64.0;
  const auto per_axis = static_cast<std::size_t>(
      std::max(2.0, std::floor(std::min(64.0, std::pow(kBudget, 1.0 / static_cast<double>(dim))))));

  const auto n = static_cast<Eigen::Index>(s.n);
  const auto m = static_cast<Eigen::Index>(s.m);
  std::priority_queue<Sample> best;  // max-heap holding the 8 lowest samples
  double ceiling = -kInf;
  std::vector<std::size_t> idx(dim, 0);
  Vec z(static_cast<Eigen::Index>(dim));
  Vec x(n), u(m);
  bool done = false;
  while (!done) {
    for (std::size_t d = 0; d < dim; ++d) {
      const auto e = static_cast<Eigen::Index>(d);
      const double t = per_axis == 1 ? 0.0 : static_cast<double>(idx[d]) / static_cast<double>(per_axis - 1);
      z[e] = box.lo[e] + t * (box.hi[e] - box.lo[e]);
    }
    x = z.head(n);
    u = z.tail(m);
    if (!s.guard || s.guard(x, u) >= s.guard_margin) {
      const double v = s.cost(x, u);
      if (std::isnan(v)) {
        // outside the cost domain; not a feasible sample
      } else if (v == -kInf) {
        throw Error("stage cost is unbounded below on the constraint set");
      } else {
        ceiling = std::max(ceiling, v);
        if (best.size() < 8) {
          best.push({v, z});
        } else if (v < best.top().value) {
          best.pop();
          best.push({v, z});
        }
      }
    }
    for (std::size_t d = 0;; ++d) {
      if (d == dim) {
        done = true;
        break;
      }
      if (++idx[d] < per_axis) {
        break;
      }
      idx[d] = 0;
    }
  }
  if (best.empty()) {
    throw InfeasibleError("no feasible (x,u) sample found while bounding the stage cost");
  }
  double floor = kInf;
  while (!best.empty()) {
    const Sample refined = refine(s, best.top(), box, 50);
    best.pop();
    floor = std::min(floor, refined.value);
  }
  if (floor < -1e12) {
    throw Error("stage cost appears unbounded below on the constraint set");
  }
  return {floor, ceiling};
}

}  // namespace

double SystemModel::cost_floor() const {
  std::call_once(bounds_->once, [this] {
    try {
      if (is_graph()) {
        double lo = kInf;
        double hi = -kInf;
        for (const auto& tr : graph().transitions()) {
          lo = std::min(lo, tr.cost);
          hi = std::max(hi, tr.cost);
        }
        bounds_->floor = lo;
        bounds_->ceiling = hi;
      } else {
        std::tie(bounds_->floor, bounds_->ceiling) = sample_cost_range(smooth());
      }
    } catch (...) {
      bounds_->error = std::current_exception();
    }
  });
  if (bounds_->error) {
    std::rethrow_exception(bounds_->error);
  }
  return bounds_->floor - cost_offset_;
}

double SystemModel::cost_ceiling() const {
  cost_floor();
  return bounds_->ceiling - cost_offset_;
}

// ---------------------------------------------------------------------------

Trajectory rollout(const SystemModel& model, const Vec& x0, const VecSeq& inputs) {
  require_dim(x0, model.state_dim(), "initial state");
  Trajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.states.push_back(x0);
  traj.inputs = inputs;
  for (const auto& u : inputs) {
    traj.states.push_back(model.next_state(traj.states.back(), u));
  }
  return traj;
}

FeasibilityReport check_feasible(const SystemModel& model, const Trajectory& traj, double tol) {
  FeasibilityReport report;
  auto note = [&](double v, std::size_t k) {
    if (v > report.worst_violation || (std::isnan(v) && !std::isnan(report.worst_violation))) {
      report.worst_violation = std::isnan(v) ? kInf : v;
      report.index = k;
    }
  };
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    note(model.state_violation(traj.states[k]), k);
  }
  for (std::size_t k = 0; k < traj.inputs.size() && k < traj.states.size(); ++k) {
    const auto& x = traj.states[k];
    const auto& u = traj.inputs[k];
    if (model.is_graph()) {
      note(model.graph().pair_distance(x, u), k);
    } else {
      note(model.input_violation(u), k);
      note(model.guard_violation(x, u), k);
    }
  }
  report.ok = report.worst_violation <= tol;
  return report;
}

ShiftedModel shift_cost_nonneg(const SystemModel& model) {
  const double floor = model.cost_floor();
  return {model.with_cost_offset(model.cost_offset() + floor), floor};
}

}  // namespace ldempc
