#include "loconav/nav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>

#include <fmt/core.h>

#include "loconav/errors.hpp"

namespace loconav {

void PlannerConfig::validate() const {
  if (connectivity != 8) throw ConfigError(fmt::format("connectivity must be 8 (got {})", connectivity));
  if (!(local_goal_radius > 0.0) || !(goal_threshold > 0.0) || !(inflation_radius > 0.0))
    throw ConfigError("planner radii must be > 0");
  if (max_steps <= 0) throw ConfigError(fmt::format("max_steps must be > 0 (got {})", max_steps));
  if (alpha < 0.0) throw ConfigError(fmt::format("collision_penalty must be >= 0 (got {})", alpha));
  if (max_replan_failures <= 0 || max_consecutive_bumps <= 0) throw ConfigError("stuck thresholds must be > 0");
}

double OctileCost::value() const { return static_cast<double>(straight) + static_cast<double>(diagonal) * std::sqrt(2.0); }

bool operator<(const OctileCost& a, const OctileCost& b) {
  // sign of (a - b) = sign(ds + dd*sqrt2) with ds, dd integers.
  const std::int64_t ds = a.straight - b.straight;
  const std::int64_t dd = a.diagonal - b.diagonal;
  if (ds <= 0 && dd <= 0) return ds < 0 || dd < 0;
  if (ds >= 0 && dd >= 0) return false;
  // Opposite signs: compare ds^2 against 2 dd^2.
  const std::int64_t s2 = ds * ds;
  const std::int64_t d2 = 2 * dd * dd;
  return ds < 0 ? s2 > d2 : d2 > s2;
}

OctileCost octile_distance(Cell a, Cell b) {
  const std::int64_t dx = std::abs(a.x - b.x);
  const std::int64_t dy = std::abs(a.y - b.y);
  return {std::max(dx, dy) - std::min(dx, dy), std::min(dx, dy)};
}

TraversabilityGrid::TraversabilityGrid(int width, int height)
    : width_(width), height_(height), blocked_(static_cast<std::size_t>(width) * height, 0) {}

TraversabilityGrid inflate(const OccupancyGrid& grid, const PlannerConfig& cfg) {
  const int side = grid.side();
  TraversabilityGrid out(side, side);
  const double reach = cfg.inflation_radius / grid.resolution() + 0.5;
  const int r = static_cast<int>(std::ceil(reach));
  std::vector<Cell> kernel;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx * dx + dy * dy < reach * reach) kernel.push_back({dx, dy});

  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const Cell c{x, y};
      if (!cfg.unknown_is_traversable && !grid.explored(c)) out.set_blocked(c, true);
      if (!grid.occupied(c)) continue;
      for (const Cell& k : kernel) {
        const Cell n{x + k.x, y + k.y};
        if (out.contains(n)) out.set_blocked(n, true);
      }
    }
  }
  return out;
}

namespace {

struct OpenEntry {
  OctileCost f;
  OctileCost h;
  std::size_t index;
};

// Min-heap on f, then h (prefer nodes nearer the goal), then index.
struct OpenAfter {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (b.f < a.f) return true;
    if (a.f < b.f) return false;
    if (b.h < a.h) return true;
    if (a.h < b.h) return false;
    return a.index > b.index;
  }
};

constexpr std::array<std::array<int, 2>, 8> kMoves{
    {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};

}  // namespace

Path plan(const TraversabilityGrid& grid, Cell start, Cell goal) {
  if (!grid.contains(start) || !grid.contains(goal)) throw ContractError("plan endpoints lie outside the grid");
  if (grid.blocked(start)) throw ContractError("plan start is not traversable");
  if (grid.blocked(goal)) throw NoPathError("goal cell is blocked");

  const int w = grid.width();
  const std::size_t n = static_cast<std::size_t>(w) * grid.height();
  auto idx = [w](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<OctileCost> g(n);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::uint8_t> closed(n, 0);
  std::vector<std::size_t> parent(n, kNone);

  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenAfter> open;
  const std::size_t s = idx(start);
  seen[s] = 1;
  open.push({octile_distance(start, goal), octile_distance(start, goal), s});
  const std::size_t target = idx(goal);

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    if (closed[top.index]) continue;
    closed[top.index] = 1;
    if (top.index == target) break;
    const Cell c{static_cast<int>(top.index % w), static_cast<int>(top.index / w)};
    for (const auto& m : kMoves) {
      const Cell nb{c.x + m[0], c.y + m[1]};
      if (!grid.contains(nb) || grid.blocked(nb)) continue;
      const bool diagonal = m[0] != 0 && m[1] != 0;
      if (diagonal && (grid.blocked({c.x + m[0], c.y}) || grid.blocked({c.x, c.y + m[1]}))) continue;
      const std::size_t ni = idx(nb);
      if (closed[ni]) continue;
      const OctileCost cand = g[top.index] + (diagonal ? OctileCost{0, 1} : OctileCost{1, 0});
      if (seen[ni] && !(cand < g[ni])) continue;
      seen[ni] = 1;
      g[ni] = cand;
      parent[ni] = top.index;
      const OctileCost h = octile_distance(nb, goal);
      open.push({cand + h, h, ni});
    }
  }
  if (!closed[target]) throw NoPathError(fmt::format("no path from ({}, {}) to ({}, {})", start.x, start.y, goal.x, goal.y));

  Path path;
  path.cost = g[target];
  for (std::size_t i = target; i != kNone; i = parent[i])
    path.cells.push_back({static_cast<int>(i % w), static_cast<int>(i / w)});
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

Path plan(const GlobalMap& map, Cell start, Cell goal, const PlannerConfig& cfg) {
  return plan(inflate(map.grid, cfg), start, goal);
}

Cell select_local_goal(std::span<const Cell> path, Cell agent_cell, double resolution, const PlannerConfig& cfg) {
  if (path.empty()) throw ContractError("select_local_goal needs a non-empty path");
  if (!(path.front() == agent_cell)) throw ContractError("path must start at the agent cell");
  const double limit = cfg.local_goal_radius / resolution + 1e-9;
  double arc = 0.0;
  std::size_t chosen = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const bool diagonal = path[i].x != path[i - 1].x && path[i].y != path[i - 1].y;
    arc += diagonal ? std::sqrt(2.0) : 1.0;
    if (arc > limit) break;
    chosen = i;
  }
  return path[chosen];
}

bool should_resample(const NavState& state, const Pose& agent_pose, const GlobalMap& map) {
  if (!state.local_goal) return true;
  if (state.global_goal != state.planned_goal) return true;
  const Cell agent = map.grid.cell_of(agent_pose.position());
  const Cell& lg = *state.local_goal;
  if (std::max(std::abs(agent.x - lg.x), std::abs(agent.y - lg.y)) <= 1) return true;
  return map.grid.contains(lg) && map.grid.occupied(lg);
}

Action local_controller(const Pose& pose_belief, Point2 local_goal, Point2 episode_goal, const PlannerConfig& cfg) {
  if (distance(pose_belief, episode_goal) <= cfg.goal_threshold) return Action::Stop;
  const double bearing =
      normalize_angle(std::atan2(local_goal.y - pose_belief.y, local_goal.x - pose_belief.x) - pose_belief.theta);
  if (bearing > cfg.bearing_tolerance) return Action::TurnLeft;
  if (bearing < -cfg.bearing_tolerance) return Action::TurnRight;
  return Action::Forward;
}

double local_reward(double d_t, double d_prev, bool bump, const PlannerConfig& cfg) {
  const double progress = cfg.reward_sign == RewardSign::Text ? d_prev - d_t : d_t - d_prev;
  return progress - cfg.alpha * (bump ? 1.0 : 0.0);
}

bool detect_hard_failure(const NavState& state, int steps, const PlannerConfig& cfg) {
  return steps >= cfg.max_steps || state.replan_failures >= cfg.max_replan_failures ||
         state.consecutive_bumps >= cfg.max_consecutive_bumps;
}

Navigator::Navigator(Point2 episode_goal, const PlannerConfig& planner, const AgentConfig& agent)
    : goal_(episode_goal), cfg_(planner), agent_(agent) {}

bool Navigator::replan(const GlobalMap& map, Cell agent) {
  const Cell goal = *state_.global_goal;
  // Retry with a thinner safety margin only when the full inflation covers the
  // agent or the goal cell (e.g. right after a bump next to a wall). A map that
  // separates two free endpoints is a real dead end.
  for (const double scale : {1.0, 0.5, 0.1}) {
    PlannerConfig cfg = cfg_;
    cfg.inflation_radius = cfg_.inflation_radius * scale;
    const TraversabilityGrid grid = inflate(map.grid, cfg);
    if (!grid.contains(agent) || !grid.contains(goal)) break;
    if (grid.blocked(agent) || grid.blocked(goal)) continue;
    try {
      Path path = plan(grid, agent, goal);
      state_.last_plan = std::move(path.cells);
      state_.local_goal = select_local_goal(state_.last_plan, agent, map.grid.resolution(), cfg_);
      state_.planned_goal = goal;
      local_goal_point_ = map.grid.center_of(*state_.local_goal);
      return true;
    } catch (const NoPathError&) {
      break;
    }
  }
  state_.last_plan.clear();
  state_.local_goal.reset();
  local_goal_point_.reset();
  return false;
}

Action Navigator::decide(const GlobalMap& map, const Pose& belief) {
  if (distance(belief, goal_) <= cfg_.goal_threshold) return Action::Stop;
  state_.global_goal = map.grid.cell_of(goal_);
  const Cell agent = map.grid.cell_of(belief.position());

  if (force_replan_ || should_resample(state_, belief, map)) {
    force_replan_ = false;
    if (replan(map, agent)) {
      state_.replan_failures = 0;
    } else {
      ++state_.replan_failures;
      force_replan_ = true;
      // Nothing to follow: rotate in place to observe more of the surroundings.
      return Action::TurnLeft;
    }
  }
  return local_controller(belief, *local_goal_point_, goal_, cfg_);
}

void Navigator::observe(Action executed, bool bump) {
  if (bump) {
    ++state_.consecutive_bumps;
    force_replan_ = true;
  } else if (executed == Action::Forward) {
    state_.consecutive_bumps = 0;
    // A full forward step covers the local-goal radius, so the goal counts as reached.
    force_replan_ = true;
  }
}

}  // namespace loconav
