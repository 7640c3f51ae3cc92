#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "sseek/comm_graph.hpp"
#include "sseek/common.hpp"

namespace sseek {

using KnownStates = std::vector<std::optional<Vec2>>;

// Number of synchronous relay rounds needed so every node learns the states
// of all sensors whose fields of view can overlap with its own:
// min(ceil(2 r_s / r_c), n). An infinite sensing radius gives n rounds.
inline int flood_rounds(int n, double r_c, double r_s) {
  if (!(r_c > 0.0) || !(r_s > 0.0)) throw invalid_input_error("flooding: radii must be > 0");
  if (std::isinf(r_s)) return n;
  const double b = std::ceil(2.0 * r_s / r_c);
  return b >= static_cast<double>(n) ? n : static_cast<int>(b);
}

// Runs the bounded-round state exchange for every node and returns each
// node's view: entry j holds x_j once some flooded copy reached the node,
// empty otherwise.
inline std::vector<KnownStates> flood_states(const CommGraph& graph,
                                             std::span<const Vec2> states, double r_c,
                                             double r_s) {
  const int n = graph.n();
  if (static_cast<int>(states.size()) != n)
    throw invalid_input_error("flood_states: state count mismatch");
  std::vector<KnownStates> known(n, KnownStates(n));
  for (int i = 0; i < n; ++i) known[i][i] = states[i];

  const int rounds = flood_rounds(n, r_c, r_s);
  for (int round = 0; round < rounds; ++round) {
    const auto snapshot = known;
    for (int i = 0; i < n; ++i)
      for (int j : graph.neighbors(i))
        for (int l = 0; l < n; ++l)
          if (!known[i][l] && snapshot[j][l]) known[i][l] = snapshot[j][l];
  }
  return known;
}

}  // namespace sseek
