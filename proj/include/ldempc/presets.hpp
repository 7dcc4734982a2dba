#pragma once

#include "ldempc/model.hpp"

#include <numbers>
#include <string_view>

namespace ldempc {

/// Parameters of the exactly discretized planar harmonic oscillator with
/// stage cost x1^3 and box constraints |x|_inf <= x_max, |u|_inf <= u_max.
struct OscillatorParams {
  double omega0 = 2.0 * std::numbers::pi / 6.0;
  double h = 1.0;
  double x_max = 1.0;
  double u_max = 0.1;
};

/// Parameters of the economic growth model x+ = u with stage cost
/// -log(scale * x^exponent - u).
struct GrowthParams {
  double scale = 5.0;
  double exponent = 0.34;
  double lower = 0.1;
  double upper = 10.0;
  double guard_margin = 1e-6;
};

/// Four-transition graph on states {-1, 0, 1} with x+ = u. From -1 the
/// transition to 0 is declared before the self-loop, so ties are resolved in
/// favour of leaving -1.
SystemModel make_graph_example();

SystemModel make_oscillator(const OscillatorParams& params = {});
/// State-transition and input matrices of the oscillator.
Mat oscillator_a(const OscillatorParams& params = {});
Mat oscillator_b(const OscillatorParams& params = {});
/// The steady state (u_max / omega0) * (-1, -1).
Vec oscillator_x0(const OscillatorParams& params = {});

SystemModel make_growth(const GrowthParams& params = {});

/// Returns the named preset: "graph", "oscillator" or "growth".
SystemModel make_preset(std::string_view name);

}  // namespace ldempc
