#include "ldempc/experiment.hpp"
#include "ldempc/presets.hpp"

#include <doctest.h>

#include <sstream>

using namespace ldempc;

namespace {

struct Run {
  int status = 0;
  std::string out;
  std::string err;
};

Run run(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.status = run_experiment(cfg, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) {
      fields.push_back(f);
    }
    if (!line.empty() && line.back() == ',') {
      fields.emplace_back();
    }
    out.push_back(fields);
  }
  return out;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(0.75) == "0.75");
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-3.0) == "-3");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("compare on the graph reproduces the parity pattern") {
  ExperimentConfig cfg;
  cfg.command = "compare";
  cfg.preset = "graph";
  cfg.horizons = parse_horizons("1..20");
  const auto r = run(cfg);
  REQUIRE(r.status == 0);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 41);
  CHECK(table[0] == std::vector<std::string>{"N", "controller", "aap_gap", "j_tr", "feasible"});
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto N = std::stoul(table[i][0]);
    CHECK(table[i][4] == "true");
    if (table[i][1] == "discounted") {
      CHECK(table[i][2] == "0");
    } else {
      REQUIRE(table[i][1] == "undiscounted");
      CHECK(table[i][2] == (N >= 3 && N % 2 == 1 ? "0.25" : "0"));
    }
  }
}

TEST_CASE("CSV output is byte-identical across runs and thread counts") {
  ExperimentConfig cfg;
  cfg.command = "compare";
  cfg.preset = "oscillator";
  cfg.horizons = {4, 6, 8};
  cfg.controllers = {"discounted", "undiscounted", "pstep:2"};
  cfg.t_sim = 12;
  cfg.p_max = 6;
  cfg.solver.multistart = 1;
  cfg.multistart_set = true;
  cfg.seed = 3;
  cfg.jobs = 1;
  const auto a = run(cfg);
  cfg.jobs = 4;
  const auto b = run(cfg);
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  CHECK(rows(a.out).size() == 10);
  // j_tr needs 30 steps; the rows say so instead of failing.
  CHECK(rows(a.out)[1][3] == "nan");
}

TEST_CASE("per-row failures do not abort a sweep") {
  ExperimentConfig cfg;
  cfg.command = "compare";
  cfg.horizons = {2, 3};
  cfg.controllers = {"pstep:3", "discounted"};
  cfg.t_sim = 10;
  const auto r = run(cfg);
  CHECK(r.status == 0);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 5);
  CHECK(table[1][1] == "pstep:3");
  CHECK(table[1][4] == "false");
  CHECK(table[1][2] == "nan");
  CHECK(table[2][4] == "true");
  CHECK(table[3][4] == "true");
  CHECK(r.err.find("N = 2, pstep:3") != std::string::npos);
}

TEST_CASE("orbit scan output") {
  ExperimentConfig cfg;
  cfg.command = "orbit-scan";
  cfg.p_max = 4;
  const auto r = run(cfg);
  REQUIRE(r.status == 0);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 5);
  CHECK(table[0] == std::vector<std::string>{"p", "avg_cost", "minimal", "status"});
  CHECK(table[1] == std::vector<std::string>{"1", "1", "true", "optimal"});
  CHECK(table[2] == std::vector<std::string>{"2", "0.75", "true", "optimal"});
  CHECK(table[4] == std::vector<std::string>{"4", "0.75", "false", "optimal"});
}

TEST_CASE("open-loop output") {
  ExperimentConfig cfg;
  cfg.command = "open-loop";
  cfg.horizons = {2};
  const auto r = run(cfg);
  REQUIRE(r.status == 0);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 4);
  CHECK(table[0] == std::vector<std::string>{"N", "discount", "k", "x1", "u1", "stage_cost", "value", "status"});
  CHECK(table[1] == std::vector<std::string>{"2", "linear", "0", "-1", "0", "1", "1", "optimal"});
  CHECK(table[3] == std::vector<std::string>{"2", "linear", "2", "1", "", "", "1", "optimal"});
}

TEST_CASE("closed-loop output") {
  ExperimentConfig cfg;
  cfg.command = "closed-loop";
  cfg.horizons = {3};
  cfg.controllers = {"undiscounted"};
  cfg.t_sim = 5;
  const auto r = run(cfg);
  REQUIRE(r.status == 0);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 6);
  CHECK(table[0] == std::vector<std::string>{"k", "x1", "u1", "stage_cost", "solver_status", "solve_iters"});
  CHECK(table[5] == std::vector<std::string>{"4", "-1", "-1", "1", "optimal", "0"});

  cfg.controllers = {"pstep:2"};
  cfg.keep_plans = true;
  const auto p = rows(run(cfg).out);
  CHECK(p[0].back() == "q_0.10000000000000001");
  CHECK(p[2][4] == "replayed");
  CHECK(p[2].back().empty());
  CHECK(p[1].back() == "1");  // plan (-1, 0, 1): only (0, 1) lies on the orbit

  cfg.controllers = {"discounted", "undiscounted"};
  CHECK(run(cfg).status == 64);
}

TEST_CASE("a closed loop that halts reports it") {
  ExperimentConfig cfg;
  cfg.command = "closed-loop";
  cfg.preset = "oscillator";
  cfg.horizons = {3};
  cfg.controllers = {"discounted"};
  cfg.x0 = std::vector<double>{2.0, 0.0};
  cfg.p_max = 1;
  const auto r = run(cfg);
  CHECK(r.status == 2);
  const auto table = rows(r.out);
  REQUIRE(table.size() == 2);
  CHECK(table[1][0] == "0");
  CHECK(table[1][6] == "infeasible");
  CHECK(r.err.find("halted at step 0") != std::string::npos);
}

TEST_CASE("verify passes on every preset") {
  for (const char* preset : {"graph", "growth", "oscillator"}) {
    ExperimentConfig cfg;
    cfg.command = "verify";
    cfg.preset = preset;
    cfg.solver.multistart = 2;
    cfg.multistart_set = true;
    const auto r = run(cfg);
    INFO(preset << "\n" << r.out << r.err);
    CHECK(r.status == 0);
    for (const auto& row : rows(r.out)) {
      CHECK(row.back() != "false");
    }
  }
}

TEST_CASE("configuration problems exit with status 64") {
  ExperimentConfig cfg;
  cfg.command = "launch";
  CHECK(run(cfg).status == 64);
  cfg.command = "open-loop";
  CHECK(run(cfg).status == 64);  // no horizons
  cfg.horizons = {2};
  cfg.x0 = std::vector<double>{0.0, 0.0};
  CHECK(run(cfg).status == 64);  // wrong dimension
  cfg.x0.reset();
  cfg.preset = "/nonexistent/model.json";
  const auto r = run(cfg);
  CHECK(r.status == 64);
  CHECK(r.err.find("cannot open") != std::string::npos);
}

TEST_CASE("defaults") {
  ExperimentConfig cfg;
  cfg.preset = "oscillator";
  CHECK(initial_state(cfg, make_oscillator()) == oscillator_x0());
  CHECK(solver_options(cfg).multistart == 20);
  cfg.multistart_set = true;
  CHECK(solver_options(cfg).multistart == 0);
  cfg.preset = "growth";
  CHECK(initial_state(cfg, make_growth())(0) == 1.0);
  cfg.preset = "graph";
  CHECK(initial_state(cfg, make_graph_example())(0) == -1.0);
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) {
    CHECK(h == 1);
  }
}
