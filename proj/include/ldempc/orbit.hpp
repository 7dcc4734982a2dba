#pragma once

#include "ldempc/model.hpp"
#include "ldempc/ocp.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ldempc {

struct OrbitPoint {
  Vec x;
  Vec u;
};

/// Feasible p-periodic orbit: x_{(k+1) mod p} = f(x_k, u_k).
struct PeriodicOrbit {
  std::size_t p = 0;
  std::vector<OrbitPoint> points;
  /// (1/p) sum_k l(x_k, u_k) with the model's own stage cost.
  double avg_cost = 0.0;
  bool minimal = true;
  SolveStatus status = SolveStatus::Optimal;
};

/// Euclidean distance from the pair (x,u) to the nearest orbit point.
double distance(const Vec& x, const Vec& u, const PeriodicOrbit& orbit);
/// Distance from x to the nearest orbit state.
double state_distance(const Vec& x, const PeriodicOrbit& orbit);

/// True when all orbit states are pairwise more than `tol` apart.
bool is_minimal(const PeriodicOrbit& orbit, double tol = 1e-6);

/// Largest periodicity defect max_k |x_{k+1} - f(x_k,u_k)|.
double orbit_defect(const SystemModel& model, const PeriodicOrbit& orbit);

struct OrbitOptions {
  double orbit_tol = 1e-8;
  double scan_tol = 1e-6;
  /// Separation below which two orbit states count as equal.
  double minimal_tol = 1e-5;
  int multistart = 20;
  std::uint64_t seed = 0;
  double tol_stat = 1e-8;
  int max_iter = 20000;
};

/// Cheapest p-periodic orbit. Graphs are solved exactly by a search over
/// closed walks of length p; smooth models by a multistart augmented
/// Lagrangian over (x_0..x_{p-1}, u_0..u_{p-1}). Throws InfeasibleError when
/// no feasible orbit is found.
PeriodicOrbit best_orbit(const SystemModel& model, std::size_t p, const OrbitOptions& opts = {});

struct ScanEntry {
  std::size_t p = 0;
  std::optional<PeriodicOrbit> orbit;
  std::string error;  // set when best_orbit failed for this p
};

struct PeriodScan {
  std::vector<ScanEntry> entries;  // p = 1..p_max
  /// Smallest p whose cost is within scan_tol of the minimum.
  std::size_t p_star = 0;
  double best_cost = 0.0;
  const PeriodicOrbit& optimal() const;
};

PeriodScan scan_periods(const SystemModel& model, std::size_t p_max, const OrbitOptions& opts = {});

/// Minimum mean cycle of a graph (Karp). The returned orbit starts at the
/// lowest-indexed state on the cycle.
PeriodicOrbit min_mean_cycle(const SystemModel& model);

}  // namespace ldempc
