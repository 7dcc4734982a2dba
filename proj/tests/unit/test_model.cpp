#include "helpers.hpp"

#include "ldempc/ocp.hpp"
#include "ldempc/presets.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

using namespace ldempc;
using testing::v1;
using testing::v2;

TEST_CASE("graph rollout follows the labeled edges") {
  const auto g = make_graph_example();
  const auto t = rollout(g, v1(-1), {v1(0), v1(1)});
  REQUIRE(t.states.size() == 3);
  CHECK(t.states[0](0) == -1.0);
  CHECK(t.states[1](0) == 0.0);
  CHECK(t.states[2](0) == 1.0);
}

TEST_CASE("empty rollout keeps only the initial state") {
  const auto t = rollout(make_oscillator(), v2(0.3, -0.2), {});
  CHECK(t.states.size() == 1);
  CHECK(t.inputs.empty());
  CHECK(t.states[0] == v2(0.3, -0.2));
}

TEST_CASE("rollout errors") {
  const auto g = make_graph_example();
  CHECK_THROWS_AS(rollout(g, v1(0), {v1(0)}), Error);  // no edge 0 --0-->
  CHECK_THROWS_AS(rollout(make_oscillator(), v1(0), {v2(0, 0)}), DimensionError);
  CHECK_THROWS_AS(rollout(make_oscillator(), v2(0, 0), {v1(0)}), DimensionError);
}

TEST_CASE("oscillator free response has period six") {
  const auto osc = make_oscillator();
  const Vec x0 = v2(0.4, -0.7);
  const auto t = rollout(osc, x0, VecSeq(6, v2(0, 0)));
  CHECK((t.states.back() - x0).norm() <= 1e-9);

  const Mat a = oscillator_a();
  Mat a6 = Mat::Identity(2, 2);
  for (int i = 0; i < 6; ++i) {
    a6 = a * a6;
  }
  CHECK((a6 - Mat::Identity(2, 2)).norm() <= 1e-9);
  const auto eig = a.eigenvalues();
  CHECK(std::abs(eig.cwiseAbs().maxCoeff() - 1.0) <= 1e-12);
}

TEST_CASE("rollout satisfies the dynamics recursion") {
  const auto osc = make_oscillator();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  VecSeq inputs;
  for (int k = 0; k < 20; ++k) {
    inputs.push_back(v2(u(rng), u(rng)));
  }
  const auto t = rollout(osc, v2(0.1, 0.2), inputs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Vec f = oscillator_a() * t.states[k] + oscillator_b() * inputs[k];
    CHECK((t.states[k + 1] - f).norm() <= 1e-12);
  }
}

TEST_CASE("check_feasible") {
  const auto osc = make_oscillator();
  SUBCASE("admissible oscillator trajectory") {
    const auto t = rollout(osc, v2(0.5, -0.5), {v2(0.1, -0.1), v2(0.05, 0.0), v2(-0.1, 0.1)});
    CHECK(check_feasible(osc, t, 1e-12).ok);
  }
  SUBCASE("input bound exceeded by 0.1") {
    const auto t = rollout(osc, v2(0.0, 0.0), {v2(0.0, 0.0), v2(0.2, 0.0)});
    const auto r = check_feasible(osc, t, 1e-12);
    CHECK_FALSE(r.ok);
    CHECK(r.worst_violation == doctest::Approx(0.1).epsilon(1e-12));
    REQUIRE(r.index);
    CHECK(*r.index == 1);
  }
  SUBCASE("growth guard at zero consumption") {
    const auto growth = make_growth();
    const double x = 2.0;
    const double u = 5.0 * std::pow(x, 0.34);  // 5x^0.34 - u = 0
    Trajectory t;
    t.states = {v1(x), v1(std::min(u, 10.0))};
    t.inputs = {v1(u)};
    CHECK_FALSE(check_feasible(growth, t, 1e-12).ok);
  }
}

TEST_CASE("stage costs of the presets") {
  const auto g = make_graph_example();
  CHECK(g.stage_cost(v1(0), v1(1)) == 0.0);
  CHECK(g.stage_cost(v1(1), v1(0)) == 1.5);
  CHECK(g.stage_cost(v1(-1), v1(-1)) == 1.0);

  const auto osc = make_oscillator();
  const double x1 = -0.1 / (2.0 * std::numbers::pi / 6.0);
  CHECK(x1 == doctest::Approx(-0.0954929659).epsilon(1e-9));
  CHECK(osc.stage_cost(v2(x1, 0.3), v2(0, 0)) == doctest::Approx(x1 * x1 * x1).epsilon(1e-15));
  CHECK(std::abs(osc.stage_cost(v2(x1, 0.3), v2(0, 0)) - -8.70791681846556e-4) <= 1e-9);

  const auto growth = make_growth();
  const double l = growth.stage_cost(v1(2.2344), v1(2.2344));
  CHECK(l == doctest::Approx(-std::log(5.0 * std::pow(2.2344, 0.34) - 2.2344)).epsilon(1e-14));
  CHECK(l == doctest::Approx(-1.4673).epsilon(1e-4));
}

TEST_CASE("stage cost outside its domain raises DomainError") {
  const auto growth = make_growth();
  CHECK_THROWS_AS(growth.stage_cost(v1(0.5), v1(9.0)), DomainError);
  CHECK(std::isinf(growth.stage_cost_or_inf(v1(0.5), v1(9.0))));
  CHECK_THROWS_AS(make_graph_example().stage_cost(v1(0), v1(0)), Error);
}

TEST_CASE("shift_cost_nonneg") {
  SUBCASE("graph costs are already nonnegative") {
    const auto s = shift_cost_nonneg(make_graph_example());
    CHECK(s.cost_min == 0.0);
    CHECK(s.model.stage_cost(v1(1), v1(0)) == 1.5);
  }
  SUBCASE("oscillator minimum is -1") {
    const auto s = shift_cost_nonneg(make_oscillator());
    CHECK(s.cost_min == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(s.model.stage_cost(v2(-1, 0), v2(0, 0)) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("growth minimum sits at the corner x = 10, u = 0.1") {
    // 5x^0.34 - u is increasing in x and decreasing in u on the box.
    const double oracle = -std::log(5.0 * std::pow(10.0, 0.34) - 0.1);
    const auto s = shift_cost_nonneg(make_growth());
    CHECK(s.cost_min == doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("shifting changes every cost by the same constant") {
  const auto osc = make_oscillator();
  const auto shifted = shift_cost_nonneg(osc);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  const auto profile = DiscountProfile::linear();
  const std::size_t N = 9;
  for (int trial = 0; trial < 10; ++trial) {
    VecSeq inputs;
    for (std::size_t k = 0; k < N; ++k) {
      inputs.push_back(v2(u(rng), u(rng)));
    }
    const double j = evaluate_cost(osc, oscillator_x0(), inputs, profile, N, N);
    const double js = evaluate_cost(shifted.model, oscillator_x0(), inputs, profile, N, N);
    CHECK(js - j == doctest::Approx(-shifted.cost_min * profile.weight_sum(N)).epsilon(1e-10));
  }
}

TEST_CASE("model construction rejects inconsistent definitions") {
  CHECK_THROWS_AS(FiniteGraph({{"a", v1(0)}}, {{0, "x", v1(0), 3, 1.0}}), Error);
  CHECK_THROWS_AS(FiniteGraph({{"a", v1(0)}, {"b", v1(1)}}, {{0, "x", v1(1), 1, 1.0}}), Error);  // b has no edge
  OscillatorParams p;
  p.u_max = -1.0;
  CHECK_THROWS_AS(make_oscillator(p), Error);
  CHECK_THROWS_AS(make_preset("pendulum"), Error);
}
