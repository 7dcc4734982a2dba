#pragma once

#include "ldempc/config.hpp"
#include "ldempc/metrics.hpp"
#include "ldempc/orbit.hpp"
#include "ldempc/simulate.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ldempc {

/// Model selected by a config: the inline model, a preset name or a model file.
SystemModel resolve_model(const ExperimentConfig& cfg);

/// cfg.x0 when given, else the preset's customary initial state: -1 on the
/// graph, (u_max/omega0)(-1,-1) on the oscillator, 1 on the growth model, the
/// first declared state of other graphs and the box centre of other smooth
/// models.
Vec initial_state(const ExperimentConfig& cfg, const SystemModel& model);

/// Solver options of a config. The oscillator preset defaults to 20 random
/// starts per solve unless the config sets multistart itself.
SolverOptions solver_options(const ExperimentConfig& cfg);

/// Runs fn(0..n-1) on up to `jobs` threads (0: hardware concurrency).
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct SweepOptions {
  std::vector<std::size_t> horizons;
  std::vector<std::string> controllers;
  std::size_t t_sim = 60;
  SolverOptions solver;
  unsigned jobs = 0;
  bool keep_plans = false;
  double l_star = 0.0;
  std::size_t p_star = 1;
  std::optional<PeriodicOrbit> orbit_hint;
  std::size_t t_lo = 25;
  std::size_t t_hi = 30;
};

struct SweepRow {
  std::size_t horizon = 0;
  std::string controller;
  double aap_gap = 0.0;  // NaN when the run halted
  double j_tr = 0.0;     // NaN when halted or shorter than t_hi
  bool feasible = false;
  std::string error;
  ClosedLoopTrace trace;
};

/// Closed loops for every (N, controller) pair, ordered by N and then by the
/// controller list. Failures are recorded in the row.
std::vector<SweepRow> run_sweep(const SystemModel& model, const Vec& x0, const SweepOptions& opts);

/// Doubles as CSV fields: 17 significant digits, "nan"/"inf" when not finite.
std::string format_number(double v);

/// Executes cfg.command ("orbit-scan", "open-loop", "closed-loop", "compare" or
/// "verify"), writing CSV to cfg.out or `out`. Returns the process exit status.
int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace ldempc
