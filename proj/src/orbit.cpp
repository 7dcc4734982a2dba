#include "ldempc/orbit.hpp"

#include "ldempc/auglag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace ldempc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Index = Eigen::Index;

/// Variables (x_0..x_{p-1}, u_0..u_{p-1}); equalities f(x_k,u_k) - x_{k+1};
/// guard rows margin - g(x_k,u_k) <= 0.
class OrbitProblem final : public ConstrainedProblem {
public:
  OrbitProblem(const SystemModel& model, std::size_t p)
      : model_(model), p_(p), n_(model.state_dim()), m_(model.input_dim()) {
    const auto& s = model_.smooth();
    Vec lo(static_cast<Index>(p_ * (n_ + m_)));
    Vec hi(lo.size());
    for (std::size_t k = 0; k < p_; ++k) {
      lo.segment(xi(k), static_cast<Index>(n_)) = s.x_bounds.lo;
      hi.segment(xi(k), static_cast<Index>(n_)) = s.x_bounds.hi;
      lo.segment(ui(k), static_cast<Index>(m_)) = s.u_bounds.lo;
      hi.segment(ui(k), static_cast<Index>(m_)) = s.u_bounds.hi;
    }
    box_ = Box(lo, hi);
  }

  std::size_t num_vars() const override { return p_ * (n_ + m_); }
  std::size_t num_ineq() const override { return model_.has_guard() ? p_ : 0; }
  std::size_t num_eq() const override { return p_ * n_; }
  const Box& bounds() const override { return box_; }

  Index xi(std::size_t k) const { return static_cast<Index>(k * n_); }
  Index ui(std::size_t k) const { return static_cast<Index>(p_ * n_ + k * m_); }

  bool evaluate(const Vec& z, double& f, Vec& c, Vec& h) const override {
    const auto& s = model_.smooth();
    c.resize(static_cast<Index>(num_ineq()));
    h.resize(static_cast<Index>(num_eq()));
    f = 0.0;
    for (std::size_t k = 0; k < p_; ++k) {
      const Vec x = z.segment(xi(k), static_cast<Index>(n_));
      const Vec u = z.segment(ui(k), static_cast<Index>(m_));
      if (model_.has_guard()) {
        const double g = s.guard(x, u);
        c[static_cast<Index>(k)] = std::isfinite(g) ? model_.guard_margin() - g : kInf;
      }
      f += model_.stage_cost_or_inf(x, u);
      h.segment(xi(k), static_cast<Index>(n_)) =
          s.dynamics(x, u) - z.segment(xi((k + 1) % p_), static_cast<Index>(n_));
    }
    f /= static_cast<double>(p_);
    return std::isfinite(f);
  }

  void gradient(const Vec& z, const Vec& yc, const Vec& yh, Vec& g) const override {
    g = Vec::Zero(z.size());
    const double scale = 1.0 / static_cast<double>(p_);
    Mat dfdx, dfdu;
    Vec lx, lu, gx, gu;
    for (std::size_t k = 0; k < p_; ++k) {
      const Vec x = z.segment(xi(k), static_cast<Index>(n_));
      const Vec u = z.segment(ui(k), static_cast<Index>(m_));
      const Vec y = yh.segment(xi(k), static_cast<Index>(n_));
      model_.linearize(x, u, dfdx, dfdu);
      model_.cost_gradient(x, u, lx, lu);
      g.segment(xi(k), static_cast<Index>(n_)) += scale * lx + dfdx.transpose() * y;
      g.segment(ui(k), static_cast<Index>(m_)) += scale * lu + dfdu.transpose() * y;
      g.segment(xi((k + 1) % p_), static_cast<Index>(n_)) -= y;
      if (model_.has_guard() && yc[static_cast<Index>(k)] != 0.0) {
        model_.guard_gradient(x, u, gx, gu);
        g.segment(xi(k), static_cast<Index>(n_)) -= yc[static_cast<Index>(k)] * gx;
        g.segment(ui(k), static_cast<Index>(m_)) -= yc[static_cast<Index>(k)] * gu;
      }
    }
  }

private:
  const SystemModel& model_;
  std::size_t p_;
  std::size_t n_;
  std::size_t m_;
  Box box_;
};

double uniform_in(double lo, double hi, std::mt19937_64& rng) {
  const double a = std::isfinite(lo) ? lo : -1.0;
  const double b = std::isfinite(hi) ? hi : 1.0;
  return std::uniform_real_distribution<double>(a, b)(rng);
}

Vec uniform_point(const Box& box, std::mt19937_64& rng) {
  Vec v(static_cast<Index>(box.dim()));
  for (Index i = 0; i < v.size(); ++i) {
    v[i] = uniform_in(box.lo[i], box.hi[i], rng);
  }
  return v;
}

Vec box_center(const Box& box) {
  Vec c(static_cast<Index>(box.dim()));
  for (Index i = 0; i < c.size(); ++i) {
    c[i] = std::isfinite(box.lo[i]) && std::isfinite(box.hi[i]) ? 0.5 * (box.lo[i] + box.hi[i]) : 0.0;
  }
  return c;
}

/// Start families, cycled: equally spaced points on a circle around the
/// centre of X in the direction of the free response (planar states only),
/// free-response rollouts from a random state, uniform random states. Inputs
/// start at the projection of zero.
Vec orbit_start(const SystemModel& model, const OrbitProblem& problem, std::size_t p, int index,
                std::mt19937_64& rng) {
  const auto& s = model.smooth();
  const std::size_t n = model.state_dim();
  const Vec u0 = s.u_bounds.project(Vec::Zero(static_cast<Index>(model.input_dim())));
  const int families = n == 2 ? 3 : 2;
  const int family = index % families + (n == 2 ? 0 : 1);
  Vec z(static_cast<Index>(problem.num_vars()));
  for (std::size_t k = 0; k < p; ++k) {
    z.segment(problem.ui(k), u0.size()) = u0;
  }
  if (family == 0) {
    const Vec c = box_center(s.x_bounds);
    double half = kInf;
    for (Index i = 0; i < 2; ++i) {
      const double w = 0.5 * (s.x_bounds.hi[i] - s.x_bounds.lo[i]);
      half = std::min(half, std::isfinite(w) ? w : 1.0);
    }
    const double r = std::uniform_real_distribution<double>(0.0, half)(rng);
    const double phi = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    Vec x(2);
    x << c[0] + r * std::cos(phi), c[1] + r * std::sin(phi);
    const Vec d0 = x - c;
    const Vec d1 = s.dynamics(x, u0) - c;
    const double dir = d0[0] * d1[1] - d0[1] * d1[0] < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < p; ++k) {
      const double a = phi + dir * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(p);
      Vec xk(2);
      xk << c[0] + r * std::cos(a), c[1] + r * std::sin(a);
      z.segment(problem.xi(k), 2) = s.x_bounds.project(xk);
    }
  } else if (family == 1) {
    Vec x = uniform_point(s.x_bounds, rng);
    for (std::size_t k = 0; k < p; ++k) {
      z.segment(problem.xi(k), static_cast<Index>(n)) = x;
      x = s.x_bounds.project(s.dynamics(x, u0));
    }
  } else {
    for (std::size_t k = 0; k < p; ++k) {
      z.segment(problem.xi(k), static_cast<Index>(n)) = uniform_point(s.x_bounds, rng);
    }
  }
  return z;
}

double average_cost(const SystemModel& model, const std::vector<OrbitPoint>& points) {
  double sum = 0.0;
  for (const auto& pt : points) {
    sum += model.stage_cost(pt.x, pt.u);
  }
  return sum / static_cast<double>(points.size());
}

PeriodicOrbit finish(const SystemModel& model, std::vector<OrbitPoint> points, SolveStatus status,
                     const OrbitOptions& opts) {
  PeriodicOrbit orbit;
  orbit.p = points.size();
  orbit.points = std::move(points);
  orbit.avg_cost = average_cost(model, orbit.points);
  orbit.status = status;
  orbit.minimal = is_minimal(orbit, opts.minimal_tol);
  return orbit;
}

/// Cheapest closed walk of exactly p transitions; ties go to the lower start
/// state and then to declaration order.
PeriodicOrbit graph_orbit(const SystemModel& model, std::size_t p, const OrbitOptions& opts) {
  const FiniteGraph& g = model.graph();
  const std::size_t ns = g.states().size();
  double best = kInf;
  std::vector<std::size_t> best_walk;
  for (std::size_t start = 0; start < ns; ++start) {
    std::vector<double> cost(ns, kInf);
    cost[start] = 0.0;
    std::vector<std::vector<std::size_t>> pred(p, std::vector<std::size_t>(ns, 0));
    for (std::size_t step = 0; step < p; ++step) {
      std::vector<double> next(ns, kInf);
      for (std::size_t t = 0; t < g.transitions().size(); ++t) {
        const auto& tr = g.transitions()[t];
        const double v = cost[tr.from] + tr.cost;
        if (v < next[tr.to]) {
          next[tr.to] = v;
          pred[step][tr.to] = t;
        }
      }
      cost = std::move(next);
    }
    if (cost[start] < best) {
      best = cost[start];
      best_walk.assign(p, 0);
      std::size_t v = start;
      for (std::size_t step = p; step-- > 0;) {
        best_walk[step] = pred[step][v];
        v = g.transitions()[best_walk[step]].from;
      }
    }
  }
  if (!std::isfinite(best)) {
    throw InfeasibleError("graph '" + model.name() + "' has no closed walk of length " + std::to_string(p));
  }
  std::vector<OrbitPoint> points;
  for (auto t : best_walk) {
    const auto& tr = g.transitions()[t];
    points.push_back({g.states()[tr.from].embedding, tr.input});
  }
  return finish(model, std::move(points), SolveStatus::Optimal, opts);
}

PeriodicOrbit smooth_orbit(const SystemModel& model, std::size_t p, const OrbitOptions& opts) {
  const SystemModel shifted = model.with_cost_offset(model.cost_offset() + model.cost_floor());
  const OrbitProblem problem(shifted, p);
  AugLagOptions al;
  al.tol_stat = opts.tol_stat;
  // Max-norm defect small enough that the Euclidean defect meets orbit_tol.
  al.tol_feas = opts.orbit_tol / std::sqrt(static_cast<double>(model.state_dim()));
  al.max_iter = opts.max_iter;

  std::mt19937_64 rng(opts.seed + p);
  std::optional<AugLagResult> best;
  const int starts = std::max(1, opts.multistart);
  for (int i = 0; i < starts; ++i) {
    const Vec z0 = orbit_start(shifted, problem, p, i, rng);
    AugLagResult r = solve_auglag(problem, z0, al);
    if (!r.domain_ok) {
      continue;
    }
    const bool feasible = r.violation <= al.tol_feas;
    bool better = !best;
    if (best) {
      const bool best_feasible = best->violation <= al.tol_feas;
      better = feasible != best_feasible ? feasible
                                         : (feasible ? r.objective < best->objective : r.violation < best->violation);
    }
    if (better) {
      best = std::move(r);
    }
  }
  if (!best || best->violation > al.tol_feas) {
    throw InfeasibleError("no feasible " + std::to_string(p) + "-periodic orbit found for '" + model.name() + "'");
  }
  std::vector<OrbitPoint> points;
  for (std::size_t k = 0; k < p; ++k) {
    points.push_back({best->z.segment(problem.xi(k), static_cast<Index>(model.state_dim())),
                      best->z.segment(problem.ui(k), static_cast<Index>(model.input_dim()))});
  }
  const SolveStatus status = best->stationarity <= opts.tol_stat ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return finish(model, std::move(points), status, opts);
}

}  // namespace

double distance(const Vec& x, const Vec& u, const PeriodicOrbit& orbit) {
  double best = kInf;
  for (const auto& pt : orbit.points) {
    if (pt.x.size() != x.size() || pt.u.size() != u.size()) {
      throw DimensionError("point does not match the orbit dimensions");
    }
    best = std::min(best, std::sqrt((pt.x - x).squaredNorm() + (pt.u - u).squaredNorm()));
  }
  return best;
}

double state_distance(const Vec& x, const PeriodicOrbit& orbit) {
  double best = kInf;
  for (const auto& pt : orbit.points) {
    if (pt.x.size() != x.size()) {
      throw DimensionError("state does not match the orbit dimension");
    }
    best = std::min(best, (pt.x - x).norm());
  }
  return best;
}

bool is_minimal(const PeriodicOrbit& orbit, double tol) {
  for (std::size_t i = 0; i < orbit.points.size(); ++i) {
    for (std::size_t j = i + 1; j < orbit.points.size(); ++j) {
      if ((orbit.points[i].x - orbit.points[j].x).norm() <= tol) {
        return false;
      }
    }
  }
  return true;
}

double orbit_defect(const SystemModel& model, const PeriodicOrbit& orbit) {
  double worst = 0.0;
  for (std::size_t k = 0; k < orbit.p; ++k) {
    const auto& pt = orbit.points[k];
    const Vec next = model.next_state(pt.x, pt.u);
    worst = std::max(worst, (next - orbit.points[(k + 1) % orbit.p].x).norm());
  }
  return worst;
}

PeriodicOrbit best_orbit(const SystemModel& model, std::size_t p, const OrbitOptions& opts) {
  if (p == 0) {
    throw Error("orbit period must be at least 1");
  }
  return model.is_graph() ? graph_orbit(model, p, opts) : smooth_orbit(model, p, opts);
}

const PeriodicOrbit& PeriodScan::optimal() const {
  if (p_star == 0 || !entries.at(p_star - 1).orbit) {
    throw InfeasibleError("period scan found no feasible orbit");
  }
  return *entries[p_star - 1].orbit;
}

PeriodScan scan_periods(const SystemModel& model, std::size_t p_max, const OrbitOptions& opts) {
  if (p_max == 0) {
    throw Error("p_max must be at least 1");
  }
  PeriodScan scan;
  double best = kInf;
  for (std::size_t p = 1; p <= p_max; ++p) {
    ScanEntry entry;
    entry.p = p;
    try {
      entry.orbit = best_orbit(model, p, opts);
      best = std::min(best, entry.orbit->avg_cost);
    } catch (const Error& e) {
      entry.error = e.what();
    }
    scan.entries.push_back(std::move(entry));
  }
  for (const auto& e : scan.entries) {
    if (e.orbit && e.orbit->avg_cost <= best + opts.scan_tol) {
      scan.p_star = e.p;
      scan.best_cost = e.orbit->avg_cost;
      break;
    }
  }
  return scan;
}

PeriodicOrbit min_mean_cycle(const SystemModel& model) {
  const FiniteGraph& g = model.graph();
  const std::size_t n = g.states().size();
  // d[k][v]: cheapest walk of exactly k transitions ending in v, from any start.
  std::vector<std::vector<double>> d(n + 1, std::vector<double>(n, kInf));
  std::vector<std::vector<std::size_t>> pred(n + 1, std::vector<std::size_t>(n, 0));
  std::fill(d[0].begin(), d[0].end(), 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t t = 0; t < g.transitions().size(); ++t) {
      const auto& tr = g.transitions()[t];
      const double v = d[k - 1][tr.from] + tr.cost;
      if (v < d[k][tr.to]) {
        d[k][tr.to] = v;
        pred[k][tr.to] = t;
      }
    }
  }
  double best = kInf;
  std::size_t arg = n;
  for (std::size_t v = 0; v < n; ++v) {
    if (!std::isfinite(d[n][v])) {
      continue;
    }
    double worst = -kInf;
    for (std::size_t k = 0; k < n; ++k) {
      if (std::isfinite(d[k][v])) {
        worst = std::max(worst, (d[n][v] - d[k][v]) / static_cast<double>(n - k));
      }
    }
    if (worst < best) {
      best = worst;
      arg = v;
    }
  }
  if (arg == n) {
    throw InfeasibleError("graph '" + model.name() + "' has no cycle");
  }
  // Any cycle on the critical walk of length n into `arg` has minimum mean.
  std::vector<std::size_t> walk(n);
  std::size_t v = arg;
  for (std::size_t k = n; k > 0; --k) {
    walk[k - 1] = pred[k][v];
    v = g.transitions()[walk[k - 1]].from;
  }
  std::vector<std::size_t> seen(n, n + 1);
  std::vector<std::size_t> cycle;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t from = g.transitions()[walk[k]].from;
    if (seen[from] <= n) {
      cycle.assign(walk.begin() + static_cast<std::ptrdiff_t>(seen[from]), walk.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
    seen[from] = k;
  }
  if (cycle.empty()) {
    // The closing state is the endpoint of the walk.
    const std::size_t end = arg;
    cycle.assign(walk.begin() + static_cast<std::ptrdiff_t>(seen[end]), walk.end());
  }
  const auto first = std::min_element(cycle.begin(), cycle.end(), [&](std::size_t a, std::size_t b) {
    return g.transitions()[a].from < g.transitions()[b].from;
  });
  std::rotate(cycle.begin(), first, cycle.end());
  std::vector<OrbitPoint> points;
  for (auto t : cycle) {
    const auto& tr = g.transitions()[t];
    points.push_back({g.states()[tr.from].embedding, tr.input});
  }
  return finish(model, std::move(points), SolveStatus::Optimal, OrbitOptions{});
}

}  // namespace ldempc
