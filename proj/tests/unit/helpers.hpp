#pragma once

#include "ldempc/model.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace testing {

inline ldempc::Vec v1(double a) { return ldempc::Vec::Constant(1, a); }

inline ldempc::Vec v2(double a, double b) {
  ldempc::Vec v(2);
  v << a, b;
  return v;
}

/// Minimum of sum_k w[k] cost over all walks of length w.size() from `s`,
/// by plain enumeration.
inline double enumerate_min(const ldempc::FiniteGraph& g, std::size_t s, const std::vector<double>& w,
                            std::size_t k = 0) {
  if (k == w.size()) {
    return 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : g.transitions()) {
    if (t.from == s) {
      best = std::min(best, w[k] * t.cost + enumerate_min(g, t.to, w, k + 1));
    }
  }
  return best;
}

/// Graph with `n` states x+ = u, where each state i has transitions to the
/// states listed in succ[i] at the given costs.
inline ldempc::SystemModel line_graph(const std::vector<std::vector<std::pair<std::size_t, double>>>& succ) {
  std::vector<ldempc::GraphState> states;
  for (std::size_t i = 0; i < succ.size(); ++i) {
    states.push_back({std::to_string(i), v1(static_cast<double>(i))});
  }
  std::vector<ldempc::GraphTransition> transitions;
  for (std::size_t i = 0; i < succ.size(); ++i) {
    for (const auto& [to, cost] : succ[i]) {
      transitions.push_back({i, std::to_string(to), v1(static_cast<double>(to)), to, cost});
    }
  }
  return ldempc::SystemModel("test", ldempc::FiniteGraph(std::move(states), std::move(transitions)));
}

}  // namespace testing
