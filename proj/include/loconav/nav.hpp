#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "loconav/geometry.hpp"
#include "loconav/mapping.hpp"
#include "loconav/world.hpp"

namespace loconav {

enum class RewardSign {
  Text,     // (d_prev - d_t) - alpha * bump: positive when approaching
  Literal,  // (d_t - d_prev) - alpha * bump
};

struct PlannerConfig {
  int connectivity = 8;
  double local_goal_radius = 0.25;
  double goal_threshold = 0.2;
  double inflation_radius = 0.2;
  bool unknown_is_traversable = true;
  int max_steps = 300;
  double alpha = 0.5;
  RewardSign reward_sign = RewardSign::Text;
  int max_replan_failures = 10;
  int max_consecutive_bumps = 25;
  double bearing_tolerance = deg_to_rad(7.5);

  void validate() const;
};

/// Path cost a + b*sqrt(2) kept as integer step counts so comparisons are exact.
struct OctileCost {
  std::int64_t straight = 0;
  std::int64_t diagonal = 0;

  double value() const;
  friend bool operator==(const OctileCost&, const OctileCost&) = default;
  friend OctileCost operator+(OctileCost a, OctileCost b) {
    return {a.straight + b.straight, a.diagonal + b.diagonal};
  }
};

bool operator<(const OctileCost& a, const OctileCost& b);

/// Admissible heuristic for 8-connected grids with unit and sqrt(2) moves.
OctileCost octile_distance(Cell a, Cell b);

class TraversabilityGrid {
 public:
  TraversabilityGrid() = default;
  TraversabilityGrid(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool blocked(Cell c) const { return blocked_[index(c)] != 0; }
  void set_blocked(Cell c, bool value) { blocked_[index(c)] = value ? 1 : 0; }

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> blocked_;
};

/// Blocks every cell whose centre lies closer than inflation_radius + res/2 to an
/// occupied cell centre (i.e. a disc of that radius would touch the cell), plus
/// unexplored cells when unknown space is not traversable.
TraversabilityGrid inflate(const OccupancyGrid& grid, const PlannerConfig& cfg);

struct Path {
  std::vector<Cell> cells;
  OctileCost cost;
};

/// A* on an 8-connected grid with octile heuristic. Diagonal moves may not cut
/// a blocked corner. Throws NoPathError when the goal is unreachable.
Path plan(const TraversabilityGrid& grid, Cell start, Cell goal);
Path plan(const GlobalMap& map, Cell start, Cell goal, const PlannerConfig& cfg);

/// Farthest path cell whose arc length from the agent is within local_goal_radius.
Cell select_local_goal(std::span<const Cell> path, Cell agent_cell, double resolution, const PlannerConfig& cfg);

struct NavState {
  std::optional<Cell> global_goal;
  /// Global goal the current local goal was selected for.
  std::optional<Cell> planned_goal;
  std::optional<Cell> local_goal;
  std::vector<Cell> last_plan;
  int replan_failures = 0;
  int consecutive_bumps = 0;
};

/// True iff the global goal changed, the agent is within one cell of the local
/// goal, or the local goal is now mapped as occupied.
bool should_resample(const NavState& state, const Pose& agent_pose, const GlobalMap& map);

Action local_controller(const Pose& pose_belief, Point2 local_goal, Point2 episode_goal, const PlannerConfig& cfg);

double local_reward(double d_t, double d_prev, bool bump, const PlannerConfig& cfg);

bool detect_hard_failure(const NavState& state, int steps, const PlannerConfig& cfg);

/// Deterministic hierarchical navigator: A* on the evolving map, local goals
/// within local_goal_radius and a point-turn controller.
class Navigator {
 public:
  Navigator(Point2 episode_goal, const PlannerConfig& planner, const AgentConfig& agent);

  Action decide(const GlobalMap& map, const Pose& belief);
  /// Feeds back the executed action; bumps and completed moves force a replan.
  void observe(Action executed, bool bump);

  const NavState& state() const { return state_; }
  Point2 goal() const { return goal_; }
  std::optional<Point2> local_goal_point() const { return local_goal_point_; }

 private:
  bool replan(const GlobalMap& map, Cell agent);

  Point2 goal_;
  PlannerConfig cfg_;
  AgentConfig agent_;
  NavState state_;
  std::optional<Point2> local_goal_point_;
  bool force_replan_ = true;
};

}  // namespace loconav
