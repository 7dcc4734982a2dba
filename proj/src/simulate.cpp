#include "ldempc/simulate.hpp"

namespace ldempc {

ClosedLoopTrace run_closed_loop(const SystemModel& model, Controller& controller, const Vec& x0, std::size_t t_sim,
                                bool keep_plans) {
  ClosedLoopTrace trace;
  trace.states.push_back(x0);
  for (std::size_t k = 0; k < t_sim; ++k) {
    const Vec& x = trace.states.back();
    try {
      ControlStep step = controller.control_step(x);
      const double cost = model.stage_cost(x, step.u);
      Vec next = model.next_state(x, step.u);
      if (!keep_plans) {
        step.diag.plan.reset();
      }
      trace.inputs.push_back(std::move(step.u));
      trace.stage_costs.push_back(cost);
      trace.diags.push_back(std::move(step.diag));
      trace.states.push_back(std::move(next));
    } catch (const Error& e) {
      trace.feasible = false;
      trace.halted_at = k;
      trace.halt_reason = e.what();
      break;
    }
  }
  return trace;
}

}  // namespace ldempc
