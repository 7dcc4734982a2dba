#pragma once

#include "ldempc/ocp.hpp"
#include "ldempc/orbit.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace ldempc {

/// Raised when the controller cannot produce an admissible input, i.e. the
/// optimal control problem at the current state came back infeasible.
class ControllerError : public Error {
public:
  using Error::Error;
};

enum class ControllerKind { Discounted1Step, Undiscounted1Step, PStep };

struct ControllerSpec {
  ControllerKind kind = ControllerKind::Discounted1Step;
  std::size_t horizon = 1;
  std::size_t p = 1;  // PStep only
  SolverOptions opts;
  /// Start each smooth solve from the shifted previous plan.
  bool warm_start = true;
  /// Orbit used to extend shifted plans; optional.
  std::optional<PeriodicOrbit> orbit_hint;
};

/// "discounted", "undiscounted" or "pstep:<p>".
std::string controller_name(const ControllerSpec& spec);
/// Parses a controller name as produced by controller_name().
ControllerSpec parse_controller(std::string_view name, std::size_t horizon);

/// Drops the first input of `prev` and appends one: the input of the orbit
/// point nearest prev's terminal state when a hint is given, else a copy of
/// the last input.
VecSeq warm_start_plan(const OcpSolution& prev, const PeriodicOrbit* orbit_hint = nullptr);

struct StepDiag {
  /// False when a stored p-step plan was replayed.
  bool solved = false;
  /// A p-step plan was discarded mid-cycle because it no longer matched the state.
  bool replanned = false;
  SolveStatus status = SolveStatus::Optimal;
  int iterations = 0;
  double stationarity = 0.0;
  double violation = 0.0;
  /// The open-loop solution computed at this step, if any.
  std::optional<OcpSolution> plan;
};

struct ControlStep {
  Vec u;
  StepDiag diag;
};

/// Receding-horizon controller. Stateful: keeps the last solution for warm
/// starting and, for p-step MPC, the stored plan and its phase.
class Controller {
public:
  Controller(const SystemModel& model, ControllerSpec spec);

  const ControllerSpec& spec() const { return spec_; }
  std::size_t phase() const { return phase_; }

  /// Input for state x. Throws DomainError when x is not admissible and
  /// ControllerError when the optimal control problem is infeasible.
  ControlStep control_step(const Vec& x);

  /// Forgets stored plans and warm starts.
  void reset();

private:
  OcpSolution solve(const Vec& x, const DiscountProfile& discount);

  SystemModel model_;
  ControllerSpec spec_;
  std::optional<OcpSolution> last_;
  std::size_t last_age_ = 0;  // steps since last_ was computed
  std::size_t phase_ = 0;
  std::size_t solves_ = 0;
};

}  // namespace ldempc
