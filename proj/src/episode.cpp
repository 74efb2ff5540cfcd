#include "loconav/episode.hpp"

#include <cmath>

namespace loconav {

EpisodeRuntime::EpisodeRuntime(const Scenario& scenario, const EpisodeSpec& spec, const ResolvedConfig& config,
                               std::uint64_t episode_seed)
    : scenario_(scenario),
      spec_(spec),
      config_(config),
      noise_(config.effective_noise()),
      streams_(EpisodeStreams::from_seed(episode_seed)),
      true_pose_(spec.start) {
  const Pose chi0 = read_odometry(true_pose_, noise_, odometry_, streams_.odometry);
  frame_ = make_frame(chi0);
  belief_ = to_episode(frame_, chi0);
  map_ = make_global_map(config_.map.global_side, config_.map.resolution);
  ground_truth_ = rasterize_ground_truth(scenario_, spec_.start, config_.thresholds, config_.map.global_side,
                                         config_.map.resolution);
  sense();
  accuracy_ = accuracy(map_, ground_truth_);
}

void EpisodeRuntime::sense() {
  const DepthImage raw = render_depth(true_pose_, config_.camera, scenario_);
  depth_ = restore_depth(apply_depth_noise(raw, noise_.depth, streams_.depth));
  const EgoMap ego =
      project_depth(depth_, config_.camera, config_.thresholds, config_.map.ego_side, config_.map.resolution);
  register_ego(ego, belief_, map_);
}

StepRecord EpisodeRuntime::apply(Action action, std::optional<Point2> local_goal) {
  StepRecord rec;
  rec.action = action;
  const Pose before = belief_;
  rec.outcome = step(true_pose_, action, config_.agent, noise_, scenario_, streams_.actuation);
  true_pose_ = rec.outcome.pose;
  path_length_ += std::hypot(rec.outcome.displacement.dx, rec.outcome.displacement.dy);
  belief_ = to_episode(frame_, read_odometry(true_pose_, noise_, odometry_, streams_.odometry));
  ++steps_;
  rec.step = steps_;

  if (rec.outcome.bump) {
    bumped_ = true;
    // The blocker sits somewhere in the swept strip ahead: mark a segment as
    // wide as the base across it.
    const double ahead = config_.agent.base_radius + 0.5 * config_.agent.forward_step;
    const double r = config_.agent.base_radius;
    const double res = config_.map.resolution;
    const int n = static_cast<int>(std::ceil(2.0 * r / (0.5 * res)));
    for (int i = 0; i <= n; ++i) {
      const double lateral = -r + 2.0 * r * i / n;
      const Cell blocked = map_.grid.cell_of(local_to_world(belief_, {ahead, lateral}));
      if (!map_.grid.contains(blocked)) continue;
      map_.grid.raise(kOccupied, blocked, 1.0f);
      map_.grid.raise(kExplored, blocked, 1.0f);
    }
  }
  if (action != Action::Stop) sense();

  const Point2 reference = local_goal.value_or(goal());
  rec.reward_local =
      local_reward(distance(belief_, reference), distance(before, reference), rec.outcome.bump, config_.planner);
  const std::int64_t acc = accuracy(map_, ground_truth_);
  rec.reward_global = acc - accuracy_;
  accuracy_ = acc;
  rec.belief = belief_;
  return rec;
}

}  // namespace loconav
