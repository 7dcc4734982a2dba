#include "helpers.hpp"

#include "ldempc/metrics.hpp"
#include "ldempc/presets.hpp"

#include <doctest.h>

#include <random>

using namespace ldempc;
using testing::v1;
using testing::v2;

namespace {

ClosedLoopTrace graph_trace(const char* controller, double x0, std::size_t T, std::size_t N = 3) {
  const auto g = make_graph_example();
  Controller c(g, parse_controller(controller, N));
  return run_closed_loop(g, c, v1(x0), T, true);
}

PeriodicOrbit graph_orbit() { return best_orbit(make_graph_example(), 2); }

}  // namespace

TEST_CASE("accumulated cost") {
  const auto disc = graph_trace("discounted", -1, 10);
  CHECK(accumulated_cost(disc, 3) == 2.5);
  CHECK(accumulated_cost(disc, 0) == 0.0);
  const auto wait = graph_trace("undiscounted", -1, 10);
  CHECK(accumulated_cost(wait, 5) == 5.0);
  CHECK_THROWS_AS(accumulated_cost(wait, 11), Error);
}

TEST_CASE("average performance of the last p steps") {
  CHECK(aap_estimate(graph_trace("discounted", -1, 60), 2) == 0.75);
  const auto wait = graph_trace("undiscounted", -1, 60);
  CHECK(aap_estimate(wait, 2) == 1.0);
  CHECK(aap_estimate(wait, 2) - 0.75 == 0.25);
  CHECK_THROWS_AS(aap_estimate(wait, 0), Error);
  CHECK_THROWS_AS(aap_estimate(wait, 61), Error);
}

TEST_CASE("transient performance") {
  const auto on_orbit = graph_trace("discounted", 0, 10);
  CHECK(std::abs(transient_performance(on_orbit, 2, 2, 0.75)) <= 1e-9);
  const auto wait = graph_trace("undiscounted", -1, 10);
  // J_T - 0.75 T = 0.25 T, averaged over T = 2..4.
  CHECK(transient_performance(wait, 2, 4, 0.75) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(transient_performance(wait, 4, 2, 0.75), Error);
  CHECK_THROWS_AS(transient_performance(wait, 2, 11, 0.75), Error);
}

TEST_CASE("turnpike counts") {
  const auto orbit = graph_orbit();
  const auto g = make_graph_example();
  const auto on = solve_ocp(g, {v1(0), 6, DiscountProfile::linear(), {}, {}, {}});
  CHECK(turnpike_count(on, orbit, 1e-3) == 6);

  OcpSolution far;
  far.inputs = VecSeq(4, v1(-1));
  far.traj = rollout(g, v1(-1), far.inputs);
  CHECK(turnpike_count(far, orbit, 0.5) == 0);

  const auto from_left = solve_ocp(g, {v1(-1), 8, DiscountProfile::linear(), {}, {}, {}});
  std::size_t prev = 0;
  for (double eps : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    const auto q = turnpike_count(from_left, orbit, eps);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK(prev == 8);
}

TEST_CASE("rotated cost identity") {
  const auto g = make_graph_example();
  const auto lin = DiscountProfile::linear();
  SUBCASE("zero storage") {
    const StorageFunction zero = [](const Vec&) { return 0.0; };
    const VecSeq u = {v1(-1), v1(0), v1(1), v1(0), v1(1)};
    const auto r = rotated_cost(g, zero, 0.75, v1(-1), u, lin, 5);
    CHECK(r.direct == doctest::Approx(evaluate_cost(g, v1(-1), u, lin, 5, 5) - 3.0 * 0.75).epsilon(1e-14));
    CHECK(r.residual <= 1e-15);
  }
  SUBCASE("random storage tables") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<double> table = {unit(rng), unit(rng), unit(rng)};
      const StorageFunction lambda = [table](const Vec& x) { return table[static_cast<std::size_t>(x(0) + 1.0)]; };
      const std::size_t N = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
      const double x0 = static_cast<double>(std::uniform_int_distribution<int>(-1, 1)(rng));
      VecSeq u;
      double x = x0;
      for (std::size_t k = 0; k < N; ++k) {
        const double next = x == -1.0 ? (unit(rng) < 0 ? -1.0 : 0.0) : (x == 0.0 ? 1.0 : 0.0);
        u.push_back(v1(next));
        x = next;
      }
      const auto r = rotated_cost(g, lambda, unit(rng), v1(x0), u, trial % 2 ? lin : DiscountProfile::constant(), N);
      CHECK(r.residual <= 1e-12);
    }
  }
  SUBCASE("linear closed form with nonzero storage") {
    const StorageFunction lambda = [](const Vec& x) { return 2.0 * x(0) + 0.5; };
    const VecSeq u = {v1(0), v1(1), v1(0), v1(1)};
    const std::size_t N = 4;
    const double l_star = 0.75;
    const auto t = rollout(g, v1(-1), u);
    double tail = 0.0;
    for (std::size_t k = 1; k <= N; ++k) {
      tail += lambda(t.states[k]);
    }
    const double closed = evaluate_cost(g, v1(-1), u, lin, N, N) - 2.5 * l_star + lambda(v1(-1)) - tail / N;
    const auto r = rotated_cost(g, lambda, l_star, v1(-1), u, lin, N);
    CHECK(r.identity == doctest::Approx(closed).epsilon(1e-14));
    CHECK(r.direct == doctest::Approx(closed).epsilon(1e-14));
  }
  SUBCASE("plans on the orbit") {
    // With zero storage each lap contributes 0.75 (w_k - w_{k+1}) with the sign
    // of the phase: +0.375 starting at x = 1, -0.375 starting at x = 0.
    const StorageFunction zero = [](const Vec&) { return 0.0; };
    for (std::size_t N : {2, 4, 10, 20}) {
      VecSeq from1;
      VecSeq from0;
      for (std::size_t k = 0; k < N; ++k) {
        from1.push_back(v1(k % 2 == 0 ? 0.0 : 1.0));
        from0.push_back(v1(k % 2 == 0 ? 1.0 : 0.0));
      }
      CHECK(rotated_cost(g, zero, 0.75, v1(1), from1, lin, N).direct == doctest::Approx(0.375).epsilon(1e-14));
      CHECK(rotated_cost(g, zero, 0.75, v1(0), from0, lin, N).direct == doctest::Approx(-0.375).epsilon(1e-14));
    }
  }
  SUBCASE("errors") {
    const StorageFunction bad = [](const Vec&) { return std::nan(""); };
    CHECK_THROWS_AS(rotated_cost(g, bad, 0.75, v1(-1), {v1(0)}, lin, 1), DomainError);
    const StorageFunction zero = [](const Vec&) { return 0.0; };
    CHECK_THROWS_AS(rotated_cost(g, zero, 0.75, v1(-1), {v1(0)}, lin, 2), Error);
  }
}

TEST_CASE("rotated cost identity on the oscillator") {
  const auto osc = make_oscillator();
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t N = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    VecSeq inputs;
    for (std::size_t k = 0; k < N; ++k) {
      inputs.push_back(v2(u(rng), u(rng)));
    }
    const double a = u(rng) * 10.0;
    const StorageFunction lambda = [a](const Vec& x) { return a * x(0) - x(1) * x(1); };
    const auto r = rotated_cost(osc, lambda, -0.2056, oscillator_x0(), inputs, DiscountProfile::linear(), N);
    CHECK(r.residual <= 1e-12);
  }
}

TEST_CASE("feasibility margin") {
  const auto g = make_graph_example();
  MarginInputs in;
  in.lambda = [](const Vec&) { return 0.0; };
  in.l_star = 0.75;
  in.p_star = 2;
  in.l_max = 1.5;
  for (std::size_t N = 2; N <= 30; ++N) {
    for (double x : {0.0, 1.0}) {
      const double m = feasibility_margin(g, in, v1(x), N, 0);
      const double V = solve_ocp(g, {v1(x), N, DiscountProfile::linear(), {}, {}, {}}).value;
      CHECK(m == doctest::Approx(V - (N + 1) / 2.0 * 0.75 - 0.75 * 2).epsilon(1e-14));
      CHECK(m <= 0.0);
    }
    CHECK(feasibility_margin(g, in, v1(-1), N, 1) <= 0.0);
  }

  SUBCASE("constant stage cost") {
    const auto flat = testing::line_graph({{{0, 2.0}}});
    MarginInputs c;
    c.lambda = [](const Vec&) { return 0.3; };
    c.lambda_bar = 0.5;
    c.l_star = 2.0;
    c.p_star = 1;
    c.l_max = 2.0;
    for (std::size_t N = 1; N <= 6; ++N) {
      CHECK(feasibility_margin(flat, c, v1(0), N, 3) == doctest::Approx(0.3 - 0.5 - 2.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("summarize a graph trace") {
  const auto orbit = graph_orbit();
  const auto t = graph_trace("discounted", -1, 60, 5);
  ReportOptions opts;
  opts.l_star = 0.75;
  opts.p_star = 2;
  opts.orbit = &orbit;
  const auto rep = summarize(t, opts);
  CHECK(rep.accumulated.size() == 61);
  CHECK(rep.accumulated[3] == 2.5);
  CHECK(rep.aap_gap == 0.0);
  CHECK(std::isfinite(rep.j_tr));
  REQUIRE(rep.turnpike_counts.size() == 3);
  for (const auto& [eps, counts] : rep.turnpike_counts) {
    CHECK(counts.size() == 60);
    CHECK(counts.back() == 5);
  }
  opts.t_hi = 61;
  CHECK(std::isnan(summarize(t, opts).j_tr));
}
