#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "loconav/config.hpp"
#include "loconav/episode.hpp"
#include "loconav/errors.hpp"
#include "loconav/nav.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace loconav;
using loconav::testing::dijkstra_cost;
using loconav::testing::valid_path;

TEST(Octile, ExactOrdering) {
  EXPECT_TRUE((OctileCost{3, 0} < OctileCost{0, 3}));   // 3 < 4.24
  EXPECT_TRUE((OctileCost{0, 2} < OctileCost{3, 0}));   // 2.83 < 3
  EXPECT_FALSE((OctileCost{1, 1} < OctileCost{1, 1}));
  EXPECT_TRUE((OctileCost{7, 0} < OctileCost{0, 5}));   // 7 < 7.07
  EXPECT_FALSE((OctileCost{0, 5} < OctileCost{7, 0}));
  EXPECT_EQ(octile_distance({0, 0}, {4, 1}), (OctileCost{3, 1}));
}

TEST(Plan, EmptyGridDiagonal) {
  const TraversabilityGrid g(5, 5);
  const Path p = plan(g, {0, 0}, {4, 4});
  EXPECT_EQ(p.cost, (OctileCost{0, 4}));
  EXPECT_NEAR(p.cost.value(), 4 * std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(valid_path(g, p.cells, {0, 0}, {4, 4}, p.cost));
}

TEST(Plan, StartEqualsGoal) {
  const TraversabilityGrid g(5, 5);
  const Path p = plan(g, {2, 3}, {2, 3});
  EXPECT_EQ(p.cells.size(), 1u);
  EXPECT_EQ(p.cost, OctileCost{});
}

TEST(Plan, EnclosedGoalHasNoPath) {
  TraversabilityGrid g(7, 7);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx)
      if (dx || dy) g.set_blocked({4 + dx, 4 + dy}, true);
  EXPECT_THROW(plan(g, {0, 0}, {4, 4}), NoPathError);
}

TEST(Plan, NoCornerCutting) {
  TraversabilityGrid g(2, 2);
  g.set_blocked({1, 0}, true);
  g.set_blocked({0, 1}, true);
  EXPECT_THROW(plan(g, {0, 0}, {1, 1}), NoPathError);
}

TEST(Plan, MatchesDijkstraOnRandomGrids) {
  Rng rng(42);
  int solved = 0;
  for (int i = 0; i < 60; ++i) {
    TraversabilityGrid g = loconav::testing::random_obstacle_grid(30, 0.3, rng);
    const Cell s{0, 0}, t{29, 29};
    g.set_blocked(s, false);
    g.set_blocked(t, false);
    const auto oracle = dijkstra_cost(g, s, t);
    if (!oracle) {
      EXPECT_THROW(plan(g, s, t), NoPathError);
      continue;
    }
    const Path p = plan(g, s, t);
    ASSERT_EQ(p.cost, *oracle);
    ASSERT_TRUE(valid_path(g, p.cells, s, t, p.cost));
    ++solved;
  }
  EXPECT_GT(solved, 10);
}

TEST(Inflate, DiscOfBaseRadius) {
  OccupancyGrid m(41, 0.05, {0, 0});
  m.set(kOccupied, {20, 20}, 1.0f);
  m.set(kExplored, {20, 20}, 1.0f);
  PlannerConfig cfg;
  cfg.inflation_radius = 0.2;
  const TraversabilityGrid g = inflate(m, cfg);
  // Blocked iff centre distance < 0.2 + 0.025 m, i.e. < 4.5 cells.
  for (int y = 0; y < 41; ++y)
    for (int x = 0; x < 41; ++x) {
      const double d = std::hypot(x - 20, y - 20);
      ASSERT_EQ(g.blocked({x, y}), d < 4.5) << x << "," << y;
    }
  cfg.unknown_is_traversable = false;
  const TraversabilityGrid strict = inflate(m, cfg);
  EXPECT_TRUE(strict.blocked({0, 0}));
}

TEST(LocalGoal, StraightPath) {
  std::vector<Cell> path;
  for (int i = 0; i < 10; ++i) path.push_back({i, 0});
  EXPECT_EQ(select_local_goal(path, {0, 0}, 0.05, PlannerConfig{}), (Cell{5, 0}));
}

TEST(LocalGoal, ShortPathReturnsLast) {
  const std::vector<Cell> path{{0, 0}, {1, 0}, {2, 0}};
  EXPECT_EQ(select_local_goal(path, {0, 0}, 0.05, PlannerConfig{}), (Cell{2, 0}));
}

TEST(LocalGoal, BendUsesArcLength) {
  const std::vector<Cell> path{{0, 0}, {1, 0}, {2, 0}, {3, 0}, {3, 1}, {3, 2}, {3, 3}, {3, 4}};
  // (3, 3) is 4.24 cells away in a straight line but 6 cells along the path.
  EXPECT_EQ(select_local_goal(path, {0, 0}, 0.05, PlannerConfig{}), (Cell{3, 2}));
}

TEST(LocalGoal, DiagonalsCountRootTwo) {
  const std::vector<Cell> path{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  EXPECT_EQ(select_local_goal(path, {0, 0}, 0.05, PlannerConfig{}), (Cell{3, 3}));
}

TEST(LocalGoal, Contracts) {
  EXPECT_THROW(select_local_goal(std::vector<Cell>{}, {0, 0}, 0.05, PlannerConfig{}), std::invalid_argument);
  EXPECT_THROW(select_local_goal(std::vector<Cell>{{1, 1}}, {0, 0}, 0.05, PlannerConfig{}), std::invalid_argument);
}

TEST(LocalGoal, AlwaysWithinRadiusOnRandomPaths) {
  Rng rng(9);
  for (int i = 0; i < 60; ++i) {
    TraversabilityGrid g = loconav::testing::random_obstacle_grid(30, 0.2, rng);
    g.set_blocked({0, 0}, false);
    g.set_blocked({29, 29}, false);
    if (!dijkstra_cost(g, {0, 0}, {29, 29})) continue;
    const Path p = plan(g, {0, 0}, {29, 29});
    const Cell lg = select_local_goal(p.cells, {0, 0}, 0.05, PlannerConfig{});
    double arc = 0.0;
    for (std::size_t k = 1; k < p.cells.size() && !(p.cells[k - 1] == lg); ++k)
      arc += (p.cells[k].x != p.cells[k - 1].x && p.cells[k].y != p.cells[k - 1].y) ? std::sqrt(2.0) : 1.0;
    ASSERT_LE(arc * 0.05, 0.25 + 1e-9);
  }
}

TEST(Resample, Conditions) {
  GlobalMap map = make_global_map(41, 0.05);
  NavState s;
  EXPECT_TRUE(should_resample(s, {0, 0, 0}, map));
  s.global_goal = Cell{30, 20};
  s.planned_goal = Cell{30, 20};
  s.local_goal = map.grid.cell_of({0.25, 0.0});
  EXPECT_FALSE(should_resample(s, {0, 0, 0}, map));
  EXPECT_TRUE(should_resample(s, {0.25, 0, 0}, map));
  map.grid.set(kOccupied, *s.local_goal, 1.0f);
  EXPECT_TRUE(should_resample(s, {0, 0, 0}, map));
  map.grid.set(kOccupied, *s.local_goal, 0.0f);
  s.global_goal = Cell{31, 20};
  EXPECT_TRUE(should_resample(s, {0, 0, 0}, map));
}

TEST(Controller, Examples) {
  const PlannerConfig cfg;
  EXPECT_EQ(local_controller({0, 0, 0}, {0.25, 0}, {3, 0}, cfg), Action::Forward);
  EXPECT_EQ(local_controller({0, 0, 0}, {0, 0.25}, {3, 0}, cfg), Action::TurnLeft);
  EXPECT_EQ(local_controller({0, 0, 0}, {0, -0.25}, {3, 0}, cfg), Action::TurnRight);
  EXPECT_EQ(local_controller({0, 0, 0}, {0.25, 0}, {0.15, 0}, cfg), Action::Stop);
  // Just inside the 7.5 degree tolerance.
  const double a = deg_to_rad(7.4);
  EXPECT_EQ(local_controller({0, 0, 0}, {std::cos(a), std::sin(a)}, {3, 0}, cfg), Action::Forward);
}

TEST(Reward, Examples) {
  PlannerConfig cfg;
  EXPECT_DOUBLE_EQ(local_reward(0.75, 1.0, false, cfg), 0.25);
  EXPECT_DOUBLE_EQ(local_reward(1.0, 1.0, true, cfg), -0.5);
  cfg.reward_sign = RewardSign::Literal;
  EXPECT_DOUBLE_EQ(local_reward(0.75, 1.0, false, cfg), -0.25);
  EXPECT_DOUBLE_EQ(local_reward(1.0, 1.0, true, cfg), -0.5);
}

TEST(HardFailure, Thresholds) {
  const PlannerConfig cfg;
  NavState s;
  EXPECT_TRUE(detect_hard_failure(s, 300, cfg));
  EXPECT_FALSE(detect_hard_failure(s, 299, cfg));
  s.replan_failures = 10;
  EXPECT_TRUE(detect_hard_failure(s, 0, cfg));
  s.replan_failures = 0;
  s.consecutive_bumps = 3;
  EXPECT_FALSE(detect_hard_failure(s, 50, cfg));
  s.consecutive_bumps = 25;
  EXPECT_TRUE(detect_hard_failure(s, 50, cfg));
}

namespace {

struct Drive {
  bool stopped = false;
  int steps = 0;
  double final_distance = 0.0;
  std::vector<StepRecord> records;
};

Drive drive(const Scenario& s, const ResolvedConfig& cfg, int limit) {
  const EpisodeSpec& spec = s.episodes.front();
  EpisodeRuntime rt(s, spec, cfg, 1);
  Navigator nav(spec.goal_rel, cfg.planner, cfg.agent);
  Drive d;
  while (rt.steps() < limit) {
    const Action a = nav.decide(rt.map(), rt.belief());
    const StepRecord r = rt.apply(a, nav.local_goal_point());
    nav.observe(a, r.outcome.bump);
    d.records.push_back(r);
    if (a == Action::Stop) {
      d.stopped = true;
      break;
    }
  }
  d.steps = rt.steps();
  d.final_distance = rt.true_goal_distance();
  return d;
}

}  // namespace

TEST(Navigator, ReachesGoalAroundABox) {
  Scenario s = loconav::testing::open_room(3.0);
  s.obstacles.push_back({0.8, -0.6, 1.2, 0.6, 1.0});
  s.episodes[0].goal_rel = {2.0, 0.0};
  const ResolvedConfig cfg = load_config("loconav", &s, {}, false);
  const Drive d = drive(s, cfg, 300);
  EXPECT_TRUE(d.stopped);
  EXPECT_LE(d.final_distance, 0.2);
  // Detour of about 2.6 m against a 2 m straight line.
  EXPECT_LE(d.steps, 4 * 11 + 24);
}

TEST(Navigator, NeverRetriesForwardIntoTheSameBlock) {
  Scenario s = loconav::testing::open_room(2.0);
  // Thin low-lying slab the camera cannot see below its field of view.
  s.obstacles.push_back({0.45, -1.0, 0.5, 1.0, 0.05});
  s.episodes[0].goal_rel = {1.2, 0.0};
  const ResolvedConfig cfg = load_config("loconav", &s, {}, false);
  const Drive d = drive(s, cfg, 120);
  int bumps = 0;
  for (std::size_t i = 0; i + 1 < d.records.size(); ++i) {
    if (!d.records[i].outcome.bump) continue;
    ++bumps;
    const StepRecord& next = d.records[i + 1];
    ASSERT_FALSE(next.action == Action::Forward && next.belief == d.records[i].belief && next.outcome.bump)
        << "step " << next.step;
  }
  EXPECT_GT(bumps, 0);
  EXPECT_TRUE(d.stopped);
}
