#include "ldempc/presets.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ldempc {

namespace {

Vec scalar(double v) {
  Vec out(1);
  out << v;
  return out;
}

}  // namespace

SystemModel make_graph_example() {
  std::vector<GraphState> states{{"-1", scalar(-1.0)}, {"0", scalar(0.0)}, {"1", scalar(1.0)}};
  std::vector<GraphTransition> transitions{
      {0, "0", scalar(0.0), 1, 1.0},
      {0, "-1", scalar(-1.0), 0, 1.0},
      {1, "1", scalar(1.0), 2, 0.0},
      {2, "0", scalar(0.0), 1, 1.5},
  };
  return SystemModel("graph", FiniteGraph(std::move(states), std::move(transitions)));
}

Mat oscillator_a(const OscillatorParams& p) {
  const double c = std::cos(p.h * p.omega0);
  const double s = std::sin(p.h * p.omega0);
  Mat a(2, 2);
  a << c, -s, s, c;
  return a;
}

Mat oscillator_b(const OscillatorParams& p) {
  const double c = std::cos(p.h * p.omega0);
  const double s = std::sin(p.h * p.omega0);
  Mat b(2, 2);
  b << s, c - 1.0, 1.0 - c, s;
  return b / p.omega0;
}

Vec oscillator_x0(const OscillatorParams& p) { return Vec::Constant(2, -p.u_max / p.omega0); }

SystemModel make_oscillator(const OscillatorParams& p) {
  if (!(p.omega0 > 0.0) || !(p.h > 0.0) || !(p.x_max > 0.0) || !(p.u_max > 0.0)) {
    throw Error("oscillator parameters omega0, h, x_max and u_max must be positive");
  }
  const Mat a = oscillator_a(p);
  const Mat b = oscillator_b(p);
  SmoothSystem sys;
  sys.n = 2;
  sys.m = 2;
  sys.dynamics = [a, b](const Vec& x, const Vec& u) -> Vec { return a * x + b * u; };
  sys.dynamics_jacobian = [a, b](const Vec&, const Vec&, Mat& dfdx, Mat& dfdu) {
    dfdx = a;
    dfdu = b;
  };
  sys.cost = [](const Vec& x, const Vec&) { return x[0] * x[0] * x[0]; };
  sys.cost_gradient = [](const Vec& x, const Vec& u, Vec& dx, Vec& du) {
    dx = Vec::Zero(x.size());
    dx[0] = 3.0 * x[0] * x[0];
    du = Vec::Zero(u.size());
  };
  sys.x_bounds = Box::uniform(2, -p.x_max, p.x_max);
  sys.u_bounds = Box::uniform(2, -p.u_max, p.u_max);
  return SystemModel("oscillator", std::move(sys));
}

SystemModel make_growth(const GrowthParams& p) {
  if (!(p.lower > 0.0) || !(p.upper > p.lower)) {
    throw Error("growth model needs 0 < lower < upper");
  }
  SmoothSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.dynamics = [](const Vec&, const Vec& u) -> Vec { return u; };
  sys.dynamics_jacobian = [](const Vec&, const Vec&, Mat& dfdx, Mat& dfdu) {
    dfdx = Mat::Zero(1, 1);
    dfdu = Mat::Identity(1, 1);
  };
  const double scale = p.scale;
  const double expo = p.exponent;
  auto output = [scale, expo](const Vec& x, const Vec& u) {
    if (!(x[0] >= 0.0)) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return scale * std::pow(x[0], expo) - u[0];
  };
  sys.guard = output;
  sys.guard_gradient = [scale, expo](const Vec& x, const Vec&, Vec& dx, Vec& du) {
    dx = scalar(scale * expo * std::pow(x[0], expo - 1.0));
    du = scalar(-1.0);
  };
  sys.cost = [output](const Vec& x, const Vec& u) {
    const double c = output(x, u);
    return c > 0.0 ? -std::log(c) : std::numeric_limits<double>::quiet_NaN();
  };
  sys.cost_gradient = [output, scale, expo](const Vec& x, const Vec& u, Vec& dx, Vec& du) {
    const double c = output(x, u);
    dx = scalar(-scale * expo * std::pow(x[0], expo - 1.0) / c);
    du = scalar(1.0 / c);
  };
  sys.x_bounds = Box::uniform(1, p.lower, p.upper);
  sys.u_bounds = Box::uniform(1, p.lower, p.upper);
  sys.guard_margin = p.guard_margin;
  return SystemModel("growth", std::move(sys));
}

SystemModel make_preset(std::string_view name) {
  if (name == "graph") {
    return make_graph_example();
  }
  if (name == "oscillator") {
    return make_oscillator();
  }
  if (name == "growth") {
    return make_growth();
  }
  throw Error("unknown preset '" + std::string(name) + "' (expected graph, oscillator or growth)");
}

}  // namespace ldempc
