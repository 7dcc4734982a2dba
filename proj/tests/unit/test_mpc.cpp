#include "helpers.hpp"

#include "ldempc/mpc.hpp"
#include "ldempc/presets.hpp"
#include "ldempc/simulate.hpp"

#include <doctest.h>

using namespace ldempc;
using testing::v1;
using testing::v2;

TEST_CASE("graph controllers at x = -1, N = 3") {
  const auto g = make_graph_example();
  SUBCASE("discounted goes immediately") {
    Controller c(g, parse_controller("discounted", 3));
    CHECK(c.control_step(v1(-1)).u(0) == 0.0);
  }
  SUBCASE("undiscounted waits") {
    Controller c(g, parse_controller("undiscounted", 3));
    CHECK(c.control_step(v1(-1)).u(0) == -1.0);
  }
  SUBCASE("two-step MPC solves once and replays") {
    Controller c(g, parse_controller("pstep:2", 3));
    const auto first = c.control_step(v1(-1));
    CHECK(first.u(0) == -1.0);
    CHECK(first.diag.solved);
    CHECK(c.phase() == 1);
    const auto second = c.control_step(v1(-1));
    CHECK(second.u(0) == 0.0);
    CHECK_FALSE(second.diag.solved);
    CHECK_FALSE(second.diag.plan);
    CHECK(c.phase() == 0);
  }
}

TEST_CASE("p-step MPC replans when the state leaves the stored plan") {
  const auto g = make_graph_example();
  Controller c(g, parse_controller("pstep:3", 3));
  CHECK(c.control_step(v1(-1)).u(0) == -1.0);  // plan (-1, 0, 1) predicts x = -1 next
  const auto step = c.control_step(v1(1));
  CHECK(step.diag.solved);
  CHECK(step.diag.replanned);
  CHECK(step.u(0) == 0.0);
  CHECK(c.phase() == 1);
}

TEST_CASE("p-step with p = 1 coincides with undiscounted MPC on the graph") {
  const auto g = make_graph_example();
  for (std::size_t N = 1; N <= 12; ++N) {
    Controller a(g, parse_controller("pstep:1", N));
    Controller b(g, parse_controller("undiscounted", N));
    const auto ta = run_closed_loop(g, a, v1(-1), 20);
    const auto tb = run_closed_loop(g, b, v1(-1), 20);
    REQUIRE(ta.states.size() == tb.states.size());
    for (std::size_t k = 0; k < ta.states.size(); ++k) {
      CHECK(ta.states[k] == tb.states[k]);
    }
    CHECK(ta.stage_costs == tb.stage_costs);
  }
}

TEST_CASE("discounted MPC on the graph reaches the orbit in one step") {
  const auto g = make_graph_example();
  for (std::size_t N = 1; N <= 30; ++N) {
    Controller c(g, parse_controller("discounted", N));
    const auto t = run_closed_loop(g, c, v1(-1), 8);
    for (std::size_t k = 1; k < t.states.size(); ++k) {
      CHECK(t.states[k](0) == (k % 2 == 1 ? 0.0 : 1.0));
    }
  }
}

TEST_CASE("warm_start_plan") {
  OcpSolution prev;
  prev.inputs = {v1(1), v1(2), v1(3)};
  prev.traj.states = {v1(0), v1(1), v1(2), v1(3)};
  SUBCASE("shift and repeat") {
    const auto plan = warm_start_plan(prev);
    REQUIRE(plan.size() == 3);
    CHECK(plan[0](0) == 2.0);
    CHECK(plan[1](0) == 3.0);
    CHECK(plan[2](0) == 3.0);
  }
  SUBCASE("orbit input at the terminal state's phase") {
    PeriodicOrbit o;
    o.p = 3;
    o.points = {{v1(5), v1(7)}, {v1(3), v1(9)}, {v1(4), v1(8)}};
    const auto plan = warm_start_plan(prev, &o);
    CHECK(plan.back()(0) == 9.0);
  }
  SUBCASE("single input") {
    OcpSolution one;
    one.inputs = {v1(4)};
    one.traj.states = {v1(0), v1(4)};
    const auto plan = warm_start_plan(one);
    REQUIRE(plan.size() == 1);
    CHECK(plan[0](0) == 4.0);
  }
  CHECK_THROWS_AS(warm_start_plan(OcpSolution{}), Error);
}

TEST_CASE("controller names") {
  CHECK(controller_name(parse_controller("discounted", 4)) == "discounted");
  CHECK(controller_name(parse_controller("undiscounted", 4)) == "undiscounted");
  const auto p = parse_controller("pstep:6", 14);
  CHECK(p.kind == ControllerKind::PStep);
  CHECK(p.p == 6);
  CHECK(p.horizon == 14);
  CHECK(controller_name(p) == "pstep:6");
  CHECK_THROWS_AS(parse_controller("pstep:", 4), Error);
  CHECK_THROWS_AS(parse_controller("pstep:0", 4), Error);
  CHECK_THROWS_AS(parse_controller("pstep:2x", 4), Error);
  CHECK_THROWS_AS(parse_controller("greedy", 4), Error);
}

TEST_CASE("controller argument errors") {
  const auto g = make_graph_example();
  CHECK_THROWS_AS(Controller(g, parse_controller("pstep:4", 3)), Error);
  CHECK_THROWS_AS(Controller(g, parse_controller("discounted", 0)), Error);
  Controller c(g, parse_controller("discounted", 3));
  CHECK_THROWS_AS(c.control_step(v1(0.5)), DomainError);
  CHECK_THROWS_AS(c.control_step(v2(0, 0)), DimensionError);
  Controller s(make_oscillator(), parse_controller("discounted", 3));
  CHECK_THROWS_AS(s.control_step(v2(1.5, 0)), DomainError);
}

TEST_CASE("identical controllers produce identical inputs") {
  const auto osc = make_oscillator();
  auto spec = parse_controller("discounted", 10);
  spec.opts.multistart = 3;
  spec.opts.seed = 9;
  Controller a(osc, spec);
  Controller b(osc, spec);
  Vec x = oscillator_x0();
  for (int k = 0; k < 4; ++k) {
    const auto ua = a.control_step(x).u;
    const auto ub = b.control_step(x).u;
    REQUIRE(ua == ub);
    x = osc.next_state(x, ua);
  }
  a.reset();
  Controller fresh(osc, spec);
  CHECK(a.control_step(oscillator_x0()).u == fresh.control_step(oscillator_x0()).u);
}
