// Command-line front end: ldempc <command> [flags]. See README.md.

#include "ldempc/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

std::vector<double> split_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& item : split(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw ldempc::ConfigError(std::string("invalid number '") + item + "' in " + what);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearly discounted economic MPC experiments"};
  app.require_subcommand(1, 1);

  std::string preset;
  std::string config_path;
  std::string horizons;
  std::string controllers;
  std::size_t tsim = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool keep_plans = false;
  std::size_t pmax = 0;
  int multistart = 0;
  unsigned jobs = 0;
  std::string discount;
  std::string x0;
  std::string eps;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"orbit-scan", "Best p-periodic orbit for p = 1..pmax"},
      {"open-loop", "Optimal open-loop plans for each horizon"},
      {"closed-loop", "Closed-loop trajectory of one controller and horizon"},
      {"compare", "Performance gaps over horizons x controllers"},
      {"verify", "Identity and property suite"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--preset", preset, "graph, oscillator, growth or a model file");
    sub->add_option("--config", config_path, "experiment file (JSON); flags override it");
    sub->add_option("--horizons,--horizon", horizons, "horizons, e.g. 1..20 or 14..20,27");
    sub->add_option("--controllers,--controller", controllers, "discounted, undiscounted, pstep:<p>, comma separated");
    sub->add_option("--tsim", tsim, "closed-loop steps");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out, "output file (default: stdout)");
    sub->add_flag("--keep-plans", keep_plans, "keep open-loop plans (turnpike counts)");
    sub->add_option("--pmax", pmax, "largest period in the orbit scan");
    sub->add_option("--multistart", multistart, "random starts per solve");
    sub->add_option("--jobs", jobs, "worker threads (0: all cores)");
    sub->add_option("--discount", discount, "constant, linear or a JSON array of weights (open-loop)");
    sub->add_option("--x0", x0, "initial state, comma separated");
    sub->add_option("--eps", eps, "turnpike radii, comma separated");
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  auto given = [sub](const char* flag) { return sub->count(flag) > 0; };

  try {
    ldempc::ExperimentConfig cfg;
    if (given("--config")) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "cannot open '" << config_path << "'\n";
        return 64;
      }
      std::ostringstream text;
      text << in.rdbuf();
      cfg = ldempc::parse_experiment(text.str());
      if (!cfg.command.empty() && cfg.command != sub->get_name()) {
        std::cerr << "config file is for '" << cfg.command << "', not '" << sub->get_name() << "'\n";
        return 64;
      }
    }
    cfg.command = sub->get_name();
    if (given("--preset")) {
      cfg.preset = preset;
      cfg.model_json.reset();
    }
    if (given("--horizons")) {
      cfg.horizons = ldempc::parse_horizons(horizons);
    }
    if (given("--controllers")) {
      cfg.controllers = split(controllers);
    }
    if (given("--tsim")) {
      if (tsim == 0) {
        throw ldempc::ConfigError("--tsim must be at least 1");
      }
      cfg.t_sim = tsim;
    }
    if (given("--seed")) {
      cfg.seed = seed;
    }
    if (given("--out")) {
      cfg.out = out;
    }
    if (given("--keep-plans")) {
      cfg.keep_plans = keep_plans;
    }
    if (given("--pmax")) {
      cfg.p_max = pmax;
    }
    if (given("--multistart")) {
      cfg.solver.multistart = multistart;
      cfg.multistart_set = true;
    }
    if (given("--jobs")) {
      cfg.jobs = jobs;
    }
    if (given("--discount")) {
      cfg.discount = ldempc::parse_discount(discount);
    }
    if (given("--x0")) {
      cfg.x0 = split_numbers(x0, "--x0");
    }
    if (given("--eps")) {
      cfg.eps = split_numbers(eps, "--eps");
    }
    return ldempc::run_experiment(cfg, std::cout, std::cerr);
  } catch (const ldempc::Error& e) {
    std::cerr << e.what() << '\n';
    return 64;
  }
}
