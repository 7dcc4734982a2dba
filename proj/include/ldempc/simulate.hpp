#pragma once

#include "ldempc/mpc.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ldempc {

/// Closed-loop run x(k+1) = f(x(k), mu(x(k))).
struct ClosedLoopTrace {
  VecSeq states;  // length T+1 (shorter after a halt)
  VecSeq inputs;
  std::vector<double> stage_costs;
  /// One entry per applied input. Open-loop plans are kept only on request.
  std::vector<StepDiag> diags;
  bool feasible = true;
  std::optional<std::size_t> halted_at;
  std::string halt_reason;

  std::size_t length() const { return inputs.size(); }
};

/// Applies `controller` t_sim times from x0. A controller error ends the run:
/// halted_at records the step and feasible becomes false.
ClosedLoopTrace run_closed_loop(const SystemModel& model, Controller& controller, const Vec& x0, std::size_t t_sim,
                                bool keep_plans = false);

}  // namespace ldempc
