#include "ldempc/config.hpp"

#include "ldempc/presets.hpp"

#include <json.hpp>

#include <charconv>
#include <set>

namespace ldempc {

namespace {

using nlohmann::json;

/// 1-based line of the first occurrence of "key" in the source, 0 if absent.
std::size_t line_of_key(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string_view::npos) {
    return 0;
  }
  std::size_t line = 1;
  for (std::size_t i = 0; i < pos; ++i) {
    line += text[i] == '\n' ? 1 : 0;
  }
  return line;
}

[[noreturn]] void fail(std::string_view text, std::string_view key, const std::string& what) {
  std::string msg = "config key '" + std::string(key) + "'";
  if (const auto line = line_of_key(text, key); line > 0) {
    msg += " (line " + std::to_string(line) + ")";
  }
  throw ConfigError(msg + ": " + what);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                      ": " + e.what());
  }
}

void reject_unknown(std::string_view text, const json& obj, const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) {
      fail(text, key, "unknown key");
    }
  }
}

template <typename T>
T get(std::string_view text, const json& obj, const std::string& key) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(text, key, e.what());
  }
}

template <typename T>
void read_opt(std::string_view text, const json& obj, const std::string& key, T& target) {
  if (obj.contains(key)) {
    target = get<T>(text, obj, key);
  }
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Embedding given explicitly or, failing that, the label read as a number.
Vec embedding_of(std::string_view text, const json& obj, const std::string& key, const std::string& label) {
  if (obj.contains(key)) {
    return to_vec(get<std::vector<double>>(text, obj, key));
  }
  double v = 0.0;
  const auto [end, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
  if (ec != std::errc() || end != label.data() + label.size()) {
    fail(text, key, "missing, and label '" + label + "' is not numeric");
  }
  return Vec::Constant(1, v);
}

SystemModel parse_graph(std::string_view text, const json& j, const std::string& name) {
  reject_unknown(text, j, {"variant", "states", "transitions"});
  if (!j.contains("states") || !j["states"].is_array()) {
    fail(text, "states", "expected an array of states");
  }
  if (!j.contains("transitions") || !j["transitions"].is_array()) {
    fail(text, "transitions", "expected an array of transitions");
  }
  std::vector<GraphState> states;
  for (const auto& s : j["states"]) {
    reject_unknown(text, s, {"label", "embedding"});
    const auto label = s.contains("label") && s["label"].is_number() ? s["label"].dump()
                                                                       : get<std::string>(text, s, "label");
    states.push_back({label, embedding_of(text, s, "embedding", label)});
  }
  auto index_of = [&](const json& t, const std::string& key) {
    const auto label = t.contains(key) && t[key].is_number() ? t[key].dump() : get<std::string>(text, t, key);
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (states[i].label == label) {
        return i;
      }
    }
    fail(text, key, "unknown state '" + label + "'");
  };
  std::vector<GraphTransition> transitions;
  for (const auto& t : j["transitions"]) {
    reject_unknown(text, t, {"from", "input", "input_embedding", "to", "cost"});
    GraphTransition tr;
    tr.from = index_of(t, "from");
    tr.to = index_of(t, "to");
    tr.input_label = t.contains("input") && t["input"].is_number() ? t["input"].dump()
                                                                    : get<std::string>(text, t, "input");
    tr.input = embedding_of(text, t, "input_embedding", tr.input_label);
    tr.cost = get<double>(text, t, "cost");
    transitions.push_back(std::move(tr));
  }
  try {
    return SystemModel(name, FiniteGraph(std::move(states), std::move(transitions)));
  } catch (const Error& e) {
    fail(text, "transitions", e.what());
  }
}

}  // namespace

std::vector<std::size_t> parse_horizons(std::string_view text) {
  std::vector<std::size_t> out;
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size() || v == 0) {
      throw ConfigError("invalid horizon '" + std::string(s) + "' (horizons are integers >= 1)");
    }
    return v;
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (const auto dots = item.find(".."); dots != std::string_view::npos) {
      const auto lo = number(item.substr(0, dots));
      const auto hi = number(item.substr(dots + 2));
      if (lo > hi) {
        throw ConfigError("empty horizon range '" + std::string(item) + "'");
      }
      for (auto n = lo; n <= hi; ++n) {
        out.push_back(n);
      }
    } else {
      out.push_back(number(item));
    }
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

DiscountProfile parse_discount(std::string_view text) {
  if (text == "constant") {
    return DiscountProfile::constant();
  }
  if (text == "linear") {
    return DiscountProfile::linear();
  }
  const json j = parse_json(text);
  if (!j.is_array()) {
    throw ConfigError("discount must be \"constant\", \"linear\" or an array of weights");
  }
  try {
    return DiscountProfile::table(j.get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("discount table: ") + e.what());
  }
}

SystemModel parse_model(std::string_view text, const std::string& name) {
  const json j = parse_json(text);
  if (!j.is_object()) {
    throw ConfigError("model config must be a JSON object");
  }
  const auto variant = get<std::string>(text, j, "variant");
  if (variant == "graph") {
    return parse_graph(text, j, name);
  }
  if (variant == "oscillator") {
    reject_unknown(text, j, {"variant", "omega0", "h", "x_max", "u_max"});
    OscillatorParams p;
    read_opt(text, j, "omega0", p.omega0);
    read_opt(text, j, "h", p.h);
    read_opt(text, j, "x_max", p.x_max);
    read_opt(text, j, "u_max", p.u_max);
    return make_oscillator(p);
  }
  if (variant == "growth") {
    reject_unknown(text, j, {"variant", "scale", "exponent", "lower", "upper", "guard_margin"});
    GrowthParams p;
    read_opt(text, j, "scale", p.scale);
    read_opt(text, j, "exponent", p.exponent);
    read_opt(text, j, "lower", p.lower);
    read_opt(text, j, "upper", p.upper);
    read_opt(text, j, "guard_margin", p.guard_margin);
    return make_growth(p);
  }
  fail(text, "variant", "expected graph, oscillator or growth, got '" + variant + "'");
}

ExperimentConfig parse_experiment(std::string_view text, ExperimentConfig cfg) {
  const json j = parse_json(text);
  if (!j.is_object()) {
    throw ConfigError("experiment config must be a JSON object");
  }
  reject_unknown(text, j,
                 {"command", "preset", "horizons", "controllers", "tsim", "eps", "seed", "out", "keep_plans", "pmax",
                  "x0", "discount", "tol_stat", "tol_feas", "max_iter", "multistart", "jobs", "model"});
  read_opt(text, j, "command", cfg.command);
  read_opt(text, j, "preset", cfg.preset);
  if (j.contains("horizons")) {
    const auto& h = j["horizons"];
    try {
      cfg.horizons = h.is_string() ? parse_horizons(h.get<std::string>()) : h.get<std::vector<std::size_t>>();
    } catch (const std::exception& e) {
      fail(text, "horizons", e.what());
    }
  }
  read_opt(text, j, "controllers", cfg.controllers);
  read_opt(text, j, "tsim", cfg.t_sim);
  read_opt(text, j, "eps", cfg.eps);
  read_opt(text, j, "seed", cfg.seed);
  read_opt(text, j, "out", cfg.out);
  read_opt(text, j, "keep_plans", cfg.keep_plans);
  read_opt(text, j, "pmax", cfg.p_max);
  read_opt(text, j, "tol_stat", cfg.solver.tol_stat);
  read_opt(text, j, "tol_feas", cfg.solver.tol_feas);
  read_opt(text, j, "max_iter", cfg.solver.max_iter);
  read_opt(text, j, "jobs", cfg.jobs);
  if (j.contains("multistart")) {
    cfg.solver.multistart = get<int>(text, j, "multistart");
    cfg.multistart_set = true;
  }
  if (j.contains("x0")) {
    cfg.x0 = get<std::vector<double>>(text, j, "x0");
  }
  if (j.contains("discount")) {
    try {
      cfg.discount = parse_discount(j["discount"].is_string() ? j["discount"].get<std::string>() : j["discount"].dump());
    } catch (const Error& e) {
      fail(text, "discount", e.what());
    }
  }
  if (j.contains("model")) {
    if (!j["model"].is_object()) {
      fail(text, "model", "expected an object");
    }
    cfg.model_json = j["model"].dump();
    // Validate early so errors point at the experiment file.
    try {
      (void)parse_model(*cfg.model_json);
    } catch (const ConfigError& e) {
      fail(text, "model", e.what());
    }
  }
  if (cfg.t_sim == 0) {
    fail(text, "tsim", "must be at least 1");
  }
  return cfg;
}

}  // namespace ldempc
