#include "ldempc/experiment.hpp"

#include "ldempc/presets.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <random>
#include <sstream>
#include <thread>

namespace ldempc {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_builtin(const std::string& preset) {
  return preset == "graph" || preset == "oscillator" || preset == "growth";
}

void write_vec(std::ostream& os, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << ',' << format_number(v(i));
  }
}

void write_blank(std::ostream& os, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    os << ',';
  }
}

void vec_header(std::ostream& os, const char* prefix, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    os << ',' << prefix << i + 1;
  }
}

OrbitOptions orbit_options(const ExperimentConfig& cfg) {
  OrbitOptions o;
  o.seed = cfg.seed;
  return o;
}

int cmd_orbit_scan(const ExperimentConfig& cfg, const SystemModel& model, std::ostream& os, std::ostream& err) {
  const PeriodScan scan = scan_periods(model, cfg.p_max, orbit_options(cfg));
  os << "p,avg_cost,minimal,status\n";
  for (const auto& e : scan.entries) {
    if (e.orbit) {
      os << e.p << ',' << format_number(e.orbit->avg_cost) << ',' << (e.orbit->minimal ? "true" : "false") << ','
         << to_string(e.orbit->status) << '\n';
    } else {
      os << e.p << ",nan,false,infeasible\n";
      err << "p = " << e.p << ": " << e.error << '\n';
    }
  }
  if (scan.p_star == 0) {
    err << "no feasible periodic orbit found\n";
    return 1;
  }
  return 0;
}

int cmd_open_loop(const ExperimentConfig& cfg, const SystemModel& model, std::ostream& os, std::ostream& err) {
  if (cfg.horizons.empty()) {
    throw ConfigError("open-loop needs at least one horizon");
  }
  const Vec x0 = initial_state(cfg, model);
  os << "N,discount,k";
  vec_header(os, "x", model.state_dim());
  vec_header(os, "u", model.input_dim());
  os << ",stage_cost,value,status\n";
  int status = 0;
  for (std::size_t N : cfg.horizons) {
    OcpSpec spec;
    spec.x0 = x0;
    spec.horizon = N;
    spec.discount = cfg.discount;
    spec.opts = solver_options(cfg);
    const OcpSolution sol = solve_ocp(model, spec);
    if (sol.status == SolveStatus::Infeasible) {
      err << "N = " << N << ": optimal control problem infeasible\n";
      status = 1;
    }
    for (std::size_t k = 0; k <= N; ++k) {
      os << N << ',' << cfg.discount.describe() << ',' << k;
      write_vec(os, sol.traj.states[k]);
      if (k < N) {
        write_vec(os, sol.inputs[k]);
        os << ',' << format_number(model.stage_cost_or_inf(sol.traj.states[k], sol.inputs[k]));
      } else {
        write_blank(os, model.input_dim() + 1);
      }
      os << ',' << format_number(sol.value) << ',' << to_string(sol.status) << '\n';
    }
  }
  return status;
}

int cmd_closed_loop(const ExperimentConfig& cfg, const SystemModel& model, std::ostream& os, std::ostream& err) {
  if (cfg.horizons.size() != 1 || cfg.controllers.size() != 1) {
    throw ConfigError("closed-loop takes exactly one horizon and one controller");
  }
  ControllerSpec spec = parse_controller(cfg.controllers.front(), cfg.horizons.front());
  spec.opts = solver_options(cfg);
  std::optional<PeriodicOrbit> orbit;
  if (cfg.keep_plans || !model.is_graph()) {
    const PeriodScan scan = scan_periods(model, cfg.p_max, orbit_options(cfg));
    if (scan.p_star > 0) {
      orbit = scan.optimal();
    }
  }
  if (!model.is_graph()) {
    spec.orbit_hint = orbit;
  }
  const Vec x0 = initial_state(cfg, model);
  Controller controller(model, spec);
  const ClosedLoopTrace trace = run_closed_loop(model, controller, x0, cfg.t_sim, cfg.keep_plans);

  const bool turnpike = cfg.keep_plans && orbit.has_value();
  os << "k";
  vec_header(os, "x", model.state_dim());
  vec_header(os, "u", model.input_dim());
  os << ",stage_cost,solver_status,solve_iters";
  if (turnpike) {
    for (double eps : cfg.eps) {
      os << ",q_" << format_number(eps);
    }
  }
  os << '\n';
  for (std::size_t k = 0; k < trace.length(); ++k) {
    const StepDiag& d = trace.diags[k];
    os << k;
    write_vec(os, trace.states[k]);
    write_vec(os, trace.inputs[k]);
    os << ',' << format_number(trace.stage_costs[k]) << ',' << (d.solved ? to_string(d.status) : "replayed") << ','
       << d.iterations;
    if (turnpike) {
      for (double eps : cfg.eps) {
        os << ',';
        if (d.plan) {
          os << turnpike_count(*d.plan, *orbit, eps);
        }
      }
    }
    os << '\n';
  }
  if (trace.halted_at) {
    os << *trace.halted_at;
    write_vec(os, trace.states.back());
    write_blank(os, model.input_dim() + 1);
    os << ",infeasible,";
    if (turnpike) {
      write_blank(os, cfg.eps.size());
    }
    os << '\n';
    err << "closed loop halted at step " << *trace.halted_at << ": " << trace.halt_reason << '\n';
    return 2;
  }
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const SystemModel& model, std::ostream& os, std::ostream& err) {
  if (cfg.horizons.empty()) {
    throw ConfigError("compare needs at least one horizon");
  }
  const PeriodScan scan = scan_periods(model, cfg.p_max, orbit_options(cfg));
  if (scan.p_star == 0) {
    err << "no feasible periodic orbit found; cannot compute performance gaps\n";
    return 1;
  }
  SweepOptions opts;
  opts.horizons = cfg.horizons;
  opts.controllers = cfg.controllers;
  opts.t_sim = cfg.t_sim;
  opts.solver = solver_options(cfg);
  opts.jobs = cfg.jobs;
  opts.l_star = scan.best_cost;
  opts.p_star = scan.p_star;
  if (!model.is_graph()) {
    opts.orbit_hint = scan.optimal();
  }
  const auto rows = run_sweep(model, initial_state(cfg, model), opts);
  os << "N,controller,aap_gap,j_tr,feasible\n";
  for (const auto& r : rows) {
    os << r.horizon << ',' << r.controller << ',' << format_number(r.aap_gap) << ',' << format_number(r.j_tr) << ','
       << (r.feasible ? "true" : "false") << '\n';
    if (!r.error.empty()) {
      err << "N = " << r.horizon << ", " << r.controller << ": " << r.error << '\n';
    }
  }
  return 0;
}

// Identity suite ------------------------------------------------------------

struct Check {
  std::string name;
  std::size_t cases = 0;
  double max_residual = 0.0;
  double threshold = 0.0;

  void add(double residual) {
    ++cases;
    max_residual = std::max(max_residual, std::isnan(residual) ? std::numeric_limits<double>::infinity() : residual);
  }
  bool pass() const { return max_residual <= threshold; }
};

/// Random admissible walk of length N on a graph; empty if a dead end is hit.
VecSeq random_walk(const FiniteGraph& g, std::size_t start, std::size_t N, std::mt19937_64& rng) {
  VecSeq u;
  std::size_t s = start;
  for (std::size_t k = 0; k < N; ++k) {
    const auto out = g.outgoing(s);
    if (out.empty()) {
      return {};
    }
    const auto& t = g.transitions()[out[std::uniform_int_distribution<std::size_t>(0, out.size() - 1)(rng)]];
    u.push_back(t.input);
    s = t.to;
  }
  return u;
}

double brute_force_min(const FiniteGraph& g, std::size_t s, std::size_t k, std::size_t N,
                       const std::vector<double>& w) {
  if (k == N) {
    return 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i : g.outgoing(s)) {
    const auto& t = g.transitions()[i];
    best = std::min(best, w[k] * t.cost + brute_force_min(g, t.to, k + 1, N, w));
  }
  return best;
}

int cmd_verify(const ExperimentConfig& cfg, const SystemModel& model, std::ostream& os) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::vector<DiscountProfile> profiles = {DiscountProfile::linear(), DiscountProfile::constant()};
  std::vector<Check> checks;

  Check weights{"weight_sum_closed_form", 0, 0.0, 1e-12};
  for (std::size_t N = 1; N <= 10000; ++N) {
    const auto w = DiscountProfile::linear().weights(N);
    double summed = 0.0;
    for (double wk : w) {
      summed += wk;
    }
    const double closed = DiscountProfile::linear().weight_sum(N);
    weights.add(closed == (static_cast<double>(N) + 1.0) / 2.0 ? std::abs(closed - summed) / closed
                                                               : std::numeric_limits<double>::infinity());
  }
  checks.push_back(weights);

  if (model.is_graph()) {
    const FiniteGraph& g = model.graph();
    const std::size_t S = g.states().size();

    Check rotated{"rotated_cost_identity", 0, 0.0, 1e-9};
    while (rotated.cases < 50) {
      std::vector<double> table(S);
      for (double& v : table) {
        v = unit(rng);
      }
      const StorageFunction lambda = [&g, table](const Vec& x) { return table[*g.state_index(x)]; };
      const std::size_t start = std::uniform_int_distribution<std::size_t>(0, S - 1)(rng);
      const std::size_t N = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
      const VecSeq u = random_walk(g, start, N, rng);
      if (u.empty()) {
        continue;
      }
      const auto& profile = profiles[rotated.cases % 2];
      rotated.add(rotated_cost(model, lambda, unit(rng), g.states()[start].embedding, u, profile, N).residual);
    }
    checks.push_back(rotated);

    Check dpp{"dpp_residual", 0, 0.0, 1e-9};
    Check brute{"dp_vs_brute_force", 0, 0.0, 1e-12};
    for (const auto& profile : profiles) {
      for (std::size_t s = 0; s < S; ++s) {
        const Vec& x = g.states()[s].embedding;
        for (std::size_t N = 1; N <= 10; ++N) {
          OcpSpec spec;
          spec.x0 = x;
          spec.horizon = N;
          spec.discount = profile;
          const OcpSolution sol = solve_ocp(model, spec);
          if (N <= 8) {
            const double exact = brute_force_min(g, s, 0, N, profile.weights(N)) - model.cost_offset() *
                                                                                        profile.weight_sum(N);
            if (std::isinf(exact)) {
              brute.add(sol.status == SolveStatus::Infeasible ? 0.0 : std::numeric_limits<double>::infinity());
            } else {
              brute.add(sol.status == SolveStatus::Infeasible ? std::numeric_limits<double>::infinity()
                                                              : std::abs(sol.value - exact));
            }
          }
          if (N >= 2 && sol.status != SolveStatus::Infeasible) {
            try {
              dpp.add(dpp_residual(model, x, N, profile).residual);
            } catch (const InfeasibleError&) {
              dpp.add(std::numeric_limits<double>::infinity());
            }
          }
        }
      }
    }
    checks.push_back(dpp);
    checks.push_back(brute);
  } else {
    const SmoothSystem& sys = model.smooth();
    const Box& ub = sys.u_bounds;
    auto random_inputs = [&](std::size_t N) {
      VecSeq u;
      for (std::size_t k = 0; k < N; ++k) {
        Vec v(ub.dim());
        for (std::size_t i = 0; i < ub.dim(); ++i) {
          const double lo = std::isfinite(ub.lo(i)) ? ub.lo(i) : -1.0;
          const double hi = std::isfinite(ub.hi(i)) ? ub.hi(i) : 1.0;
          v(i) = lo + (hi - lo) * 0.5 * (unit(rng) + 1.0);
        }
        u.push_back(v);
      }
      return u;
    };
    auto cost_defined = [&](const Vec& x0, const VecSeq& u) {
      const Trajectory t = rollout(model, x0, u);
      for (std::size_t k = 0; k < u.size(); ++k) {
        if (!std::isfinite(model.stage_cost_or_inf(t.states[k], u[k]))) {
          return false;
        }
      }
      return true;
    };
    const Vec x0 = initial_state(cfg, model);

    Check rotated{"rotated_cost_identity", 0, 0.0, 1e-9};
    for (int attempt = 0; rotated.cases < 20 && attempt < 2000; ++attempt) {
      const std::size_t N = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
      const VecSeq u = random_inputs(N);
      if (!cost_defined(x0, u)) {
        continue;
      }
      const Vec a = Vec::NullaryExpr(model.state_dim(), [&] { return unit(rng); });
      const double b = unit(rng);
      const StorageFunction lambda = [a, b](const Vec& x) { return a.dot(x) + b * x.squaredNorm(); };
      const auto& profile = profiles[rotated.cases % 2];
      rotated.add(rotated_cost(model, lambda, unit(rng), x0, u, profile, N).residual);
    }
    checks.push_back(rotated);

    Check gradient{"gradient_vs_central_fd", 0, 0.0, 1e-5};
    for (int attempt = 0; gradient.cases < 10 && attempt < 2000; ++attempt) {
      const std::size_t N = std::uniform_int_distribution<std::size_t>(1, 10)(rng);
      const VecSeq u = random_inputs(N);
      if (!cost_defined(x0, u)) {
        continue;
      }
      const auto& profile = profiles[gradient.cases % 2];
      const Vec g = cost_gradient(model, x0, u, profile);
      const Vec z = stack(u);
      Vec fd(z.size());
      bool defined = true;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double h = 1e-6 * (1.0 + std::abs(z(i)));
        Vec zp = z;
        Vec zm = z;
        zp(i) += h;
        zm(i) -= h;
        const VecSeq up = unstack(zp, model.input_dim());
        const VecSeq um = unstack(zm, model.input_dim());
        if (!cost_defined(x0, up) || !cost_defined(x0, um)) {
          defined = false;
          break;
        }
        fd(i) = (evaluate_cost(model, x0, up, profile, N, N) - evaluate_cost(model, x0, um, profile, N, N)) / (2 * h);
      }
      if (defined) {
        gradient.add((g - fd).norm() / std::max(1.0, fd.norm()));
      }
    }
    checks.push_back(gradient);

    Check dpp{"dpp_residual", 0, 0.0, 1e-5};
    const SolverOptions opts = solver_options(cfg);
    for (const auto& profile : profiles) {
      for (std::size_t N : {4, 8}) {
        try {
          dpp.add(dpp_residual(model, x0, N, profile, opts).residual);
        } catch (const InfeasibleError&) {
          dpp.add(std::numeric_limits<double>::infinity());
        }
      }
    }
    checks.push_back(dpp);
  }

  os << "check,cases,max_residual,threshold,pass\n";
  bool ok = true;
  for (const auto& c : checks) {
    os << c.name << ',' << c.cases << ',' << format_number(c.max_residual) << ',' << format_number(c.threshold) << ','
       << (c.pass() ? "true" : "false") << '\n';
    ok = ok && c.pass();
  }
  return ok ? 0 : 1;
}

}  // namespace

SystemModel resolve_model(const ExperimentConfig& cfg) {
  if (cfg.model_json) {
    return parse_model(*cfg.model_json, "custom");
  }
  if (is_builtin(cfg.preset)) {
    return make_preset(cfg.preset);
  }
  return parse_model(read_file(cfg.preset), cfg.preset);
}

Vec initial_state(const ExperimentConfig& cfg, const SystemModel& model) {
  if (cfg.x0) {
    if (cfg.x0->size() != model.state_dim()) {
      throw ConfigError("x0 has dimension " + std::to_string(cfg.x0->size()) + ", the model expects " +
                        std::to_string(model.state_dim()));
    }
    return Eigen::Map<const Vec>(cfg.x0->data(), static_cast<Eigen::Index>(cfg.x0->size()));
  }
  const bool preset = !cfg.model_json && is_builtin(cfg.preset);
  if (preset && cfg.preset == "graph") {
    return Vec::Constant(1, -1.0);
  }
  if (preset && cfg.preset == "oscillator") {
    return oscillator_x0();
  }
  if (preset && cfg.preset == "growth") {
    return Vec::Constant(1, 1.0);
  }
  if (model.is_graph()) {
    return model.graph().states().front().embedding;
  }
  const Box& box = model.smooth().x_bounds;
  Vec x(box.dim());
  for (std::size_t i = 0; i < box.dim(); ++i) {
    const bool lo = std::isfinite(box.lo(i));
    const bool hi = std::isfinite(box.hi(i));
    x(i) = lo && hi ? 0.5 * (box.lo(i) + box.hi(i)) : lo ? box.lo(i) : hi ? box.hi(i) : 0.0;
  }
  return x;
}

SolverOptions solver_options(const ExperimentConfig& cfg) {
  SolverOptions opts = cfg.solver;
  opts.seed = cfg.seed;
  if (!cfg.multistart_set && !cfg.model_json && cfg.preset == "oscillator") {
    opts.multistart = 20;
  }
  return opts;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) {
    jobs = std::max(1u, std::thread::hardware_concurrency());
  }
  const std::size_t workers = std::min<std::size_t>(jobs, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        fn(i);
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
}

std::vector<SweepRow> run_sweep(const SystemModel& model, const Vec& x0, const SweepOptions& opts) {
  std::vector<SweepRow> rows;
  for (std::size_t N : opts.horizons) {
    for (const auto& name : opts.controllers) {
      SweepRow r;
      r.horizon = N;
      r.controller = name;
      r.aap_gap = kNan;
      r.j_tr = kNan;
      rows.push_back(std::move(r));
    }
  }
  // Force the shared cost bounds before workers copy the model.
  (void)model.cost_floor();
  parallel_for(rows.size(), opts.jobs, [&](std::size_t i) {
    SweepRow& r = rows[i];
    try {
      ControllerSpec spec = parse_controller(r.controller, r.horizon);
      spec.opts = opts.solver;
      spec.orbit_hint = opts.orbit_hint;
      Controller controller(model, spec);
      r.trace = run_closed_loop(model, controller, x0, opts.t_sim, opts.keep_plans);
      r.feasible = r.trace.feasible;
      if (!r.feasible) {
        r.error = "halted at step " + std::to_string(*r.trace.halted_at) + ": " + r.trace.halt_reason;
        return;
      }
      r.aap_gap = aap_estimate(r.trace, opts.p_star) - opts.l_star;
      if (opts.t_hi <= r.trace.length()) {
        r.j_tr = transient_performance(r.trace, opts.t_lo, opts.t_hi, opts.l_star);
      }
    } catch (const Error& e) {
      r.feasible = false;
      r.error = e.what();
    }
  });
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const SystemModel model = resolve_model(cfg);
    std::ofstream file;
    if (!cfg.out.empty()) {
      file.open(cfg.out);
      if (!file) {
        err << "cannot write '" << cfg.out << "'\n";
        return 1;
      }
    }
    std::ostream& os = cfg.out.empty() ? out : file;
    if (cfg.command == "orbit-scan") {
      return cmd_orbit_scan(cfg, model, os, err);
    }
    if (cfg.command == "open-loop") {
      return cmd_open_loop(cfg, model, os, err);
    }
    if (cfg.command == "closed-loop") {
      return cmd_closed_loop(cfg, model, os, err);
    }
    if (cfg.command == "compare") {
      return cmd_compare(cfg, model, os, err);
    }
    if (cfg.command == "verify") {
      return cmd_verify(cfg, model, os);
    }
    err << "unknown command '" << cfg.command << "'\n";
    return 64;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return 64;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

}  // namespace ldempc
