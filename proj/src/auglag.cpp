#include "ldempc/auglag.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ldempc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStepMin = 1e-12;
constexpr double kStepMax = 1e12;
constexpr int kMaxHalvings = 60;
constexpr double kRoundoff = 1e-14;

/// Augmented Lagrangian for fixed multipliers and penalty.
class Merit {
public:
  Merit(const ConstrainedProblem& problem, double penalty, const Vec& mu, const Vec& lambda)
      : problem_(problem), rho_(penalty), mu_(mu), lambda_(lambda) {}

  double value(const Vec& z) const {
    double f = 0.0;
    if (!problem_.evaluate(z, f, c_, h_) || !std::isfinite(f)) {
      return kInf;
    }
    double v = f;
    for (Eigen::Index i = 0; i < c_.size(); ++i) {
      const double t = std::max(0.0, c_[i] + mu_[i] / rho_);
      v += 0.5 * rho_ * t * t - 0.5 * mu_[i] * mu_[i] / rho_;
    }
    for (Eigen::Index j = 0; j < h_.size(); ++j) {
      v += lambda_[j] * h_[j] + 0.5 * rho_ * h_[j] * h_[j];
    }
    return std::isfinite(v) ? v : kInf;
  }

  void gradient(const Vec& z, Vec& g) const {
    double f = 0.0;
    problem_.evaluate(z, f, c_, h_);
    const Vec yc = (mu_ + rho_ * c_).cwiseMax(0.0);
    const Vec yh = lambda_ + rho_ * h_;
    problem_.gradient(z, yc, yh, g);
  }

private:
  const ConstrainedProblem& problem_;
  double rho_;
  const Vec& mu_;
  const Vec& lambda_;
  mutable Vec c_;
  mutable Vec h_;
};

double projected_gradient_norm(const Box& box, const Vec& z, const Vec& g) {
  return (box.project(z - g) - z).lpNorm<Eigen::Infinity>();
}

struct InnerResult {
  int iterations = 0;
  double stationarity = kInf;
};

/// Spectral projected gradient with monotone Armijo backtracking.
InnerResult minimize_on_box(const Merit& merit, const Box& box, Vec& z, double tol, int budget, double armijo,
                            std::vector<double>* history) {
  InnerResult out;
  double phi = merit.value(z);
  Vec g;
  merit.gradient(z, g);
  out.stationarity = projected_gradient_norm(box, z, g);
  double alpha = std::clamp(1.0 / std::max(out.stationarity, 1e-300), kStepMin, kStepMax);
  Vec trial;
  Vec g_trial;
  while (out.iterations < budget && out.stationarity > tol) {
    Vec d = box.project(z - alpha * g) - z;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = box.project(z - g) - z;
      slope = g.dot(d);
      if (!(slope < 0.0)) {
        break;
      }
    }
    double t = 1.0;
    double phi_trial = kInf;
    bool accepted = false;
    for (int halving = 0; halving < kMaxHalvings; ++halving) {
      trial = z + t * d;
      phi_trial = merit.value(trial);
      if (phi_trial <= phi + armijo * t * slope && phi_trial < phi) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++out.iterations;
    if (!accepted) {
      break;
    }
    merit.gradient(trial, g_trial);
    const Vec s = trial - z;
    const double sy = s.dot(g_trial - g);
    alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, kStepMin, kStepMax) : kStepMax;
    z.swap(trial);
    g.swap(g_trial);
    phi = phi_trial;
    out.stationarity = projected_gradient_norm(box, z, g);
    if (history != nullptr) {
      history->push_back(phi);
    }
  }
  return out;
}

/// Forward-difference Hessian of the merit restricted to the index set `free`.
Mat free_hessian(const Merit& merit, const Box& box, const Vec& z, const Vec& g, const std::vector<Eigen::Index>& free) {
  const auto nf = static_cast<Eigen::Index>(free.size());
  Mat h(nf, nf);
  Vec zp = z;
  Vec gp;
  for (Eigen::Index a = 0; a < nf; ++a) {
    const Eigen::Index j = free[static_cast<std::size_t>(a)];
    double step = 1.5e-8 * (1.0 + std::abs(z[j]));
    if (z[j] + step > box.hi[j]) {
      step = -step;
    }
    zp[j] = z[j] + step;
    merit.gradient(zp, gp);
    zp[j] = z[j];
    for (Eigen::Index b = 0; b < nf; ++b) {
      h(b, a) = (gp[free[static_cast<std::size_t>(b)]] - g[free[static_cast<std::size_t>(b)]]) / step;
    }
  }
  return 0.5 * (h + h.transpose());
}

/// Newton direction for the free block with a diagonal shift until the
/// shifted matrix is positive definite.
bool newton_direction(const Mat& h, const Vec& g_free, Vec& d_free, double& curvature) {
  if (!h.allFinite()) {
    return false;
  }
  const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-12);
  double shift = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Mat shifted = h;
    shifted.diagonal().array() += shift;
    Eigen::LLT<Mat> llt(shifted);
    if (llt.info() == Eigen::Success) {
      d_free = -llt.solve(g_free);
      if (d_free.allFinite()) {
        curvature = shifted.diagonal().mean();
        return true;
      }
    }
    shift = shift == 0.0 ? 1e-10 * scale : 10.0 * shift;
  }
  return false;
}

/// Two-metric projected Newton with Armijo search along the projection arc.
/// Free variables whose Newton step leaves the box are moved exactly onto the
/// bound they cross and the step of the remaining ones is recomputed for that
/// face. Avoids free/active cycling of variables at degenerate bounds.
void clamp_to_face(const Mat& h, const Vec& g_free, const Box& box, const Vec& z,
                   const std::vector<Eigen::Index>& free, Vec& d_free) {
  const auto nf = static_cast<Eigen::Index>(free.size());
  std::vector<bool> clamped(free.size(), false);
  for (Eigen::Index round = 0; round < nf; ++round) {
    bool changed = false;
    for (Eigen::Index a = 0; a < nf; ++a) {
      const Eigen::Index i = free[static_cast<std::size_t>(a)];
      if (clamped[static_cast<std::size_t>(a)]) {
        continue;
      }
      const double target = z[i] + d_free[a];
      if (target > box.hi[i] || target < box.lo[i]) {
        d_free[a] = (target > box.hi[i] ? box.hi[i] : box.lo[i]) - z[i];
        clamped[static_cast<std::size_t>(a)] = true;
        changed = true;
      }
    }
    if (!changed) {
      return;
    }
    std::vector<Eigen::Index> rest;
    for (Eigen::Index a = 0; a < nf; ++a) {
      if (!clamped[static_cast<std::size_t>(a)]) {
        rest.push_back(a);
      }
    }
    if (rest.empty()) {
      return;
    }
    const auto nr = static_cast<Eigen::Index>(rest.size());
    Mat hr(nr, nr);
    Vec rhs(nr);
    for (Eigen::Index r = 0; r < nr; ++r) {
      rhs[r] = g_free[rest[static_cast<std::size_t>(r)]];
      for (Eigen::Index a = 0; a < nf; ++a) {
        if (clamped[static_cast<std::size_t>(a)]) {
          rhs[r] += h(rest[static_cast<std::size_t>(r)], a) * d_free[a];
        }
      }
      for (Eigen::Index c = 0; c < nr; ++c) {
        hr(r, c) = h(rest[static_cast<std::size_t>(r)], rest[static_cast<std::size_t>(c)]);
      }
    }
    Vec dr;
    double unused = 0.0;
    if (!newton_direction(hr, rhs, dr, unused)) {
      return;
    }
    for (Eigen::Index r = 0; r < nr; ++r) {
      d_free[rest[static_cast<std::size_t>(r)]] = dr[r];
    }
  }
}

InnerResult minimize_on_box_newton(const Merit& merit, const Box& box, Vec& z, double tol, int budget, double armijo,
                                   std::vector<double>* history) {
  InnerResult out;
  double phi = merit.value(z);
  Vec g;
  merit.gradient(z, g);
  out.stationarity = projected_gradient_norm(box, z, g);
  const auto dim = z.size();
  std::vector<Eigen::Index> free;
  std::vector<Eigen::Index> active;
  Vec trial;
  Vec g_trial;
  while (out.iterations < budget && out.stationarity > tol) {
    const double eps = std::min(1e-3, out.stationarity);
    free.clear();
    active.clear();
    for (Eigen::Index i = 0; i < dim; ++i) {
      const bool at_lo = z[i] <= box.lo[i] + eps && g[i] > 0.0;
      const bool at_hi = z[i] >= box.hi[i] - eps && g[i] < 0.0;
      (at_lo || at_hi ? active : free).push_back(i);
    }
    Vec d = Vec::Zero(dim);
    Vec face;
    double curvature = 1.0;
    bool have_newton = false;
    if (!free.empty()) {
      const Mat h = free_hessian(merit, box, z, g, free);
      Vec g_free(static_cast<Eigen::Index>(free.size()));
      for (std::size_t a = 0; a < free.size(); ++a) {
        g_free[static_cast<Eigen::Index>(a)] = g[free[a]];
      }
      Vec d_free;
      have_newton = newton_direction(h, g_free, d_free, curvature);
      if (have_newton) {
        Vec d_face = d_free;
        clamp_to_face(h, g_free, box, z, free, d_face);
        if (!d_face.isApprox(d_free)) {
          face = Vec::Zero(dim);
          for (std::size_t a = 0; a < free.size(); ++a) {
            face[free[a]] = d_face[static_cast<Eigen::Index>(a)];
          }
        }
        for (std::size_t a = 0; a < free.size(); ++a) {
          d[free[a]] = d_free[static_cast<Eigen::Index>(a)];
        }
      }
    }
    if (!have_newton) {
      d = -g;
      curvature = 1.0;
      free.clear();
      active.clear();
      for (Eigen::Index i = 0; i < dim; ++i) {
        active.push_back(i);
      }
    } else {
      for (auto i : active) {
        d[i] = -g[i] / std::max(curvature, 1e-12);
      }
    }

    double t = 1.0;
    double phi_trial = kInf;
    bool accepted = false;
    bool roundoff_step = false;
    if (face.size() > 0) {
      // Full step onto the face first; the plain two-metric arc otherwise.
      for (auto i : active) {
        face[i] = d[i];
      }
      trial = box.project(z + face);
      const double decrease = -g.dot(trial - z);
      if (decrease > 0.0) {
        phi_trial = merit.value(trial);
        accepted = phi_trial <= phi - armijo * decrease && phi_trial < phi;
      }
      face.resize(0);
    }
    for (int halving = 0; halving < kMaxHalvings && !accepted; ++halving) {
      trial = box.project(z + t * d);
      double decrease = 0.0;
      for (auto i : free) {
        decrease -= t * g[i] * d[i];
      }
      for (auto i : active) {
        decrease += g[i] * (z[i] - trial[i]);
      }
      if (!(decrease > 0.0)) {
        t *= 0.5;
        continue;
      }
      phi_trial = merit.value(trial);
      if (phi_trial <= phi - armijo * decrease && phi_trial < phi) {
        accepted = true;
        break;
      }
      if (armijo * decrease <= kRoundoff * (1.0 + std::abs(phi))) {
        // Predicted decrease below the resolution of phi: take the full
        // step if it does not increase phi and reduces stationarity.
        trial = box.project(z + d);
        phi_trial = merit.value(trial);
        if (phi_trial <= phi) {
          merit.gradient(trial, g_trial);
          if (projected_gradient_norm(box, trial, g_trial) < out.stationarity) {
            accepted = true;
            roundoff_step = true;
          }
        }
        break;
      }
      t *= 0.5;
    }
    ++out.iterations;
    if (!accepted) {
      // Fall back to one spectral projected-gradient step.
      const int used = out.iterations;
      InnerResult fallback = minimize_on_box(merit, box, z, tol, 1, armijo, history);
      out.iterations = used + fallback.iterations;
      if (fallback.iterations == 0 || merit.value(z) >= phi) {
        break;
      }
      phi = merit.value(z);
      merit.gradient(z, g);
      out.stationarity = projected_gradient_norm(box, z, g);
      continue;
    }
    if (!roundoff_step) {
      merit.gradient(trial, g_trial);
    }
    z.swap(trial);
    g.swap(g_trial);
    phi = phi_trial;
    out.stationarity = projected_gradient_norm(box, z, g);
    if (history != nullptr) {
      history->push_back(phi);
    }
  }
  return out;
}

}  // namespace

double constraint_violation(const Vec& c, const Vec& h) {
  double v = 0.0;
  if (c.size() > 0) {
    v = std::max(v, c.maxCoeff());
  }
  if (h.size() > 0) {
    v = std::max(v, h.lpNorm<Eigen::Infinity>());
  }
  return std::isnan(v) ? kInf : v;
}

AugLagResult solve_auglag(const ConstrainedProblem& problem, const Vec& z0, const AugLagOptions& opts) {
  const Box& box = problem.bounds();
  if (static_cast<std::size_t>(z0.size()) != problem.num_vars()) {
    throw DimensionError("start point does not match the number of variables");
  }
  AugLagResult res;
  res.z = box.project(z0);
  res.mult_ineq = Vec::Zero(static_cast<Eigen::Index>(problem.num_ineq()));
  res.mult_eq = Vec::Zero(static_cast<Eigen::Index>(problem.num_eq()));

  Vec c, h;
  double f = 0.0;
  if (!problem.evaluate(res.z, f, c, h) || !std::isfinite(f)) {
    res.domain_ok = false;
    res.objective = kInf;
    res.violation = kInf;
    res.stationarity = kInf;
    return res;
  }

  const bool unconstrained = problem.num_ineq() == 0 && problem.num_eq() == 0;
  double rho = opts.penalty0;
  for (int round = 0; round < opts.max_outer; ++round) {
    const bool last = round + 1 == opts.max_outer;
    const double tol =
        (unconstrained || last) ? opts.tol_stat : std::max(opts.tol_stat, 1e-2 * std::pow(0.1, round));
    std::vector<double>* history = nullptr;
    if (opts.record_history) {
      res.merit_history.emplace_back();
      history = &res.merit_history.back();
    }
    const Merit merit(problem, rho, res.mult_ineq, res.mult_eq);
    const int budget = std::min(opts.max_iter - res.iterations, 500);
    const InnerResult inner =
        opts.inner == InnerSolver::ProjectedNewton
            ? minimize_on_box_newton(merit, box, res.z, tol, budget, opts.armijo, history)
            : minimize_on_box(merit, box, res.z, tol, budget, opts.armijo, history);
    res.iterations += inner.iterations;
    res.outer_rounds = round + 1;

    problem.evaluate(res.z, f, c, h);
    res.violation = constraint_violation(c, h);
    // The merit gradient at the old multipliers is the Lagrangian gradient at the updated ones.
    res.stationarity = inner.stationarity;
    res.mult_ineq = (res.mult_ineq + rho * c).cwiseMax(0.0);
    res.mult_eq += rho * h;

    if (res.violation <= opts.tol_feas && res.stationarity <= opts.tol_stat) {
      res.converged = true;
      break;
    }
    if (unconstrained || res.iterations >= opts.max_iter) {
      break;
    }
    if (res.violation > opts.tol_feas) {
      rho *= opts.penalty_growth;
    }
  }
  res.objective = f;
  return res;
}

}  // namespace ldempc
