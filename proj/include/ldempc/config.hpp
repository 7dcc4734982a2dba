#pragma once

#include "ldempc/discount.hpp"
#include "ldempc/model.hpp"
#include "ldempc/ocp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ldempc {

/// Malformed configuration. The message names the offending key and, when it
/// can be located, the line in the source text.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Parses "a..b", "a,b,c" and mixtures such as "14..20,27".
std::vector<std::size_t> parse_horizons(std::string_view text);

/// Model description: {"variant": "graph" | "oscillator" | "growth", ...}.
///
/// graph:      "states": [{"label": "-1", "embedding": [-1]}, ...],
///             "transitions": [{"from": "-1", "input": "0", "input_embedding": [0],
///                              "to": "0", "cost": 1}, ...]
/// oscillator: "omega0", "h", "x_max", "u_max"
/// growth:     "scale", "exponent", "lower", "upper", "guard_margin"
SystemModel parse_model(std::string_view json_text, const std::string& name = "custom");

struct ExperimentConfig {
  std::string command;
  /// Preset name or path of a model file.
  std::string preset = "graph";
  std::vector<std::size_t> horizons;
  std::vector<std::string> controllers = {"discounted", "undiscounted"};
  std::size_t t_sim = 60;
  std::vector<double> eps = {0.01, 0.05, 0.1};
  std::uint64_t seed = 0;
  std::string out;  // empty: standard output
  bool keep_plans = false;
  std::size_t p_max = 12;
  std::optional<std::vector<double>> x0;
  DiscountProfile discount = DiscountProfile::linear();
  SolverOptions solver;
  bool multistart_set = false;
  /// Worker threads for sweeps; 0 picks the hardware concurrency.
  unsigned jobs = 0;
  /// Inline model from the config file, overriding `preset`.
  std::optional<std::string> model_json;
};

/// Reads an experiment file. Keys mirror the command-line flags: command,
/// preset, horizons, controllers, tsim, eps, seed, out, keep_plans, pmax, x0,
/// discount, tol_stat, tol_feas, max_iter, multistart, jobs, model.
ExperimentConfig parse_experiment(std::string_view json_text, ExperimentConfig base = {});

/// Parses a discount: "constant", "linear" or a JSON array of weights.
DiscountProfile parse_discount(std::string_view text);

}  // namespace ldempc
