#pragma once

#include "ldempc/types.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ldempc {

struct GraphState {
  std::string label;
  Vec embedding;  // numeric coordinates used for distances
};

struct GraphTransition {
  std::size_t from = 0;
  std::string input_label;
  Vec input;  // numeric embedding of the input label
  std::size_t to = 0;
  double cost = 0.0;
};

/// Finite state/input system given as a labeled transition graph.
///
/// States and inputs are opaque labels carrying numeric embeddings so that
/// distances to periodic orbits can be measured. Transitions keep their
/// declaration order, which is the tie-break order of the exact solvers.
class FiniteGraph {
public:
  FiniteGraph(std::vector<GraphState> states, std::vector<GraphTransition> transitions);

  const std::vector<GraphState>& states() const { return states_; }
  const std::vector<GraphTransition>& transitions() const { return transitions_; }
  std::size_t state_dim() const;
  std::size_t input_dim() const;

  /// Index of the state whose embedding equals `x` exactly.
  std::optional<std::size_t> state_index(const Vec& x) const;
  std::optional<std::size_t> state_index(const std::string& label) const;
  /// Transition indices leaving `state`, in declaration order.
  std::span<const std::size_t> outgoing(std::size_t state) const { return outgoing_.at(state); }
  /// First declared transition from `state` whose input embedding equals `u`.
  std::optional<std::size_t> find_transition(std::size_t state, const Vec& u) const;

  /// Distance from `x` to the nearest state embedding.
  double state_distance(const Vec& x) const;
  /// Distance from (x,u) to the nearest admissible (state, input) pair.
  double pair_distance(const Vec& x, const Vec& u) const;

private:
  std::vector<GraphState> states_;
  std::vector<GraphTransition> transitions_;
  std::vector<std::vector<std::size_t>> outgoing_;
};

/// Continuous-state system x+ = f(x,u) with box constraints and an optional
/// scalar guard g(x,u) >= guard_margin delimiting where the cost is defined.
///
/// Derivative callbacks are optional; missing ones are replaced by central
/// finite differences.
struct SmoothSystem {
  using Dynamics = std::function<Vec(const Vec&, const Vec&)>;
  using Scalar = std::function<double(const Vec&, const Vec&)>;
  using Jacobian = std::function<void(const Vec&, const Vec&, Mat& dfdx, Mat& dfdu)>;
  using Gradient = std::function<void(const Vec&, const Vec&, Vec& dx, Vec& du)>;

  std::size_t n = 0;
  std::size_t m = 0;
  Dynamics dynamics;
  Scalar cost;  // may return NaN or inf outside its domain
  Jacobian dynamics_jacobian;
  Gradient cost_gradient;
  Box x_bounds;
  Box u_bounds;
  Scalar guard;
  Gradient guard_gradient;
  double guard_margin = 1e-6;
};

/// Dynamics, stage cost and constraint sets of one control problem.
///
/// Values are immutable after construction. A model may carry a constant
/// cost offset (see shift_cost_nonneg) which is subtracted from every stage
/// cost it reports.
class SystemModel {
public:
  enum class Variant { FiniteGraph, Smooth };

  SystemModel(std::string name, FiniteGraph graph);
  SystemModel(std::string name, SmoothSystem system);

  const std::string& name() const { return name_; }
  Variant variant() const;
  bool is_graph() const { return variant() == Variant::FiniteGraph; }
  const FiniteGraph& graph() const;
  const SmoothSystem& smooth() const;

  std::size_t state_dim() const;
  std::size_t input_dim() const;

  Vec next_state(const Vec& x, const Vec& u) const;

  /// l(x,u) minus the cost offset. Throws DomainError outside the cost domain.
  double stage_cost(const Vec& x, const Vec& u) const;
  /// Like stage_cost, but returns +inf instead of throwing.
  double stage_cost_or_inf(const Vec& x, const Vec& u) const noexcept;

  double cost_offset() const { return cost_offset_; }
  SystemModel with_cost_offset(double offset) const;

  bool has_guard() const;
  double guard_margin() const;
  double guard_value(const Vec& x, const Vec& u) const;

  /// Violation of the state / input constraint sets (0 when admissible).
  double state_violation(const Vec& x) const;
  double input_violation(const Vec& u) const;
  /// margin - g(x,u) clipped at zero; 0 for models without guard.
  double guard_violation(const Vec& x, const Vec& u) const;

  /// Smooth models only.
  void linearize(const Vec& x, const Vec& u, Mat& dfdx, Mat& dfdu) const;
  void cost_gradient(const Vec& x, const Vec& u, Vec& dx, Vec& du) const;
  void guard_gradient(const Vec& x, const Vec& u, Vec& dx, Vec& du) const;

  /// inf of stage_cost over the constraint set. Exact for graphs, estimated by
  /// grid sampling plus local descent for smooth systems. Computed once and
  /// shared between copies of the model.
  double cost_floor() const;
  /// sup of stage_cost over the constraint set (grid maximum for smooth systems).
  double cost_ceiling() const;

private:
  struct Bounds;

  std::string name_;
  std::variant<FiniteGraph, SmoothSystem> def_;
  double cost_offset_ = 0.0;
  std::shared_ptr<Bounds> bounds_;
};

/// Finite-horizon state/input trajectory: states has one entry more than inputs.
struct Trajectory {
  VecSeq states;
  VecSeq inputs;

  std::size_t length() const { return inputs.size(); }
};

/// Simulates x(k+1) = f(x(k),u(k)) from x0. Constraints are not enforced.
Trajectory rollout(const SystemModel& model, const Vec& x0, const VecSeq& inputs);

struct FeasibilityReport {
  bool ok = true;
  double worst_violation = 0.0;
  std::optional<std::size_t> index;  // time step of the worst violation
};

/// Checks states, inputs and the cost-domain guard along a trajectory.
FeasibilityReport check_feasible(const SystemModel& model, const Trajectory& traj, double tol);

struct ShiftedModel {
  SystemModel model;
  double cost_min = 0.0;
};

/// Returns the model with stage cost l - l_min >= 0 together with l_min.
ShiftedModel shift_cost_nonneg(const SystemModel& model);

}  // namespace ldempc
