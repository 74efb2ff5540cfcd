#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "loconav/nav.hpp"

namespace loconav::testing {

/// Plain Dijkstra over the same move rules as the planner (8-connected, no
/// corner cutting). Costs are kept as (straight, diagonal) counts and ordered
/// through long double, independent of the planner's integer comparison.
inline std::optional<OctileCost> dijkstra_cost(const TraversabilityGrid& grid, Cell start, Cell goal) {
  if (grid.blocked(start) || grid.blocked(goal)) return std::nullopt;
  const int w = grid.width();
  const std::size_t n = static_cast<std::size_t>(w) * grid.height();
  const long double root2 = std::sqrt(2.0L);
  auto value = [&](const OctileCost& c) { return c.straight + c.diagonal * root2; };
  std::vector<std::optional<OctileCost>> best(n);
  std::vector<bool> done(n, false);
  using Item = std::pair<long double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  auto idx = [w](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
  best[idx(start)] = OctileCost{};
  q.push({0.0L, idx(start)});
  while (!q.empty()) {
    const auto [d, i] = q.top();
    q.pop();
    if (done[i]) continue;
    done[i] = true;
    const Cell c{static_cast<int>(i % w), static_cast<int>(i / w)};
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const Cell nb{c.x + dx, c.y + dy};
        if (!grid.contains(nb) || grid.blocked(nb)) continue;
        const bool diagonal = dx != 0 && dy != 0;
        if (diagonal && (grid.blocked({c.x + dx, c.y}) || grid.blocked({c.x, c.y + dy}))) continue;
        OctileCost cand = *best[i];
        (diagonal ? cand.diagonal : cand.straight) += 1;
        const std::size_t j = idx(nb);
        if (best[j] && value(*best[j]) <= value(cand)) continue;
        best[j] = cand;
        q.push({value(cand), j});
      }
    }
  }
  return best[idx(goal)];
}

/// True iff `cells` is an 8-connected, corner-respecting walk over free cells
/// from start to goal whose step costs add up to `cost`.
inline bool valid_path(const TraversabilityGrid& grid, const std::vector<Cell>& cells, Cell start, Cell goal,
                       OctileCost cost) {
  if (cells.empty() || !(cells.front() == start) || !(cells.back() == goal)) return false;
  OctileCost sum;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!grid.contains(cells[i]) || grid.blocked(cells[i])) return false;
    if (i == 0) continue;
    const int dx = cells[i].x - cells[i - 1].x;
    const int dy = cells[i].y - cells[i - 1].y;
    if (std::abs(dx) > 1 || std::abs(dy) > 1 || (dx == 0 && dy == 0)) return false;
    if (dx != 0 && dy != 0) {
      if (grid.blocked({cells[i - 1].x + dx, cells[i - 1].y}) || grid.blocked({cells[i - 1].x, cells[i - 1].y + dy}))
        return false;
      ++sum.diagonal;
    } else {
      ++sum.straight;
    }
  }
  return sum == cost;
}

template <typename RngT>
TraversabilityGrid random_obstacle_grid(int side, double density, RngT& rng) {
  TraversabilityGrid g(side, side);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) g.set_blocked({x, y}, u(rng) < density);
  return g;
}

}  // namespace loconav::testing
