#pragma once

#include <cstdint>
#include <optional>

#include "loconav/config.hpp"
#include "loconav/mapping.hpp"
#include "loconav/pose.hpp"
#include "loconav/rng.hpp"
#include "loconav/scenario.hpp"
#include "loconav/sensors.hpp"
#include "loconav/world.hpp"

namespace loconav {

/// Everything that happens in one executed action.
struct StepRecord {
  int step = 0;
  Action action = Action::Stop;
  StepOutcome outcome;
  Pose belief;
  double reward_local = 0.0;
  std::int64_t reward_global = 0;
};

/// Simulation state of one episode: the true agent, its odometry, the sensing
/// pipeline and the episode-frame global map. Autonomous runs and teleop
/// sessions drive the same object, so identical action sequences give
/// identical trajectories.
class EpisodeRuntime {
 public:
  EpisodeRuntime(const Scenario& scenario, const EpisodeSpec& spec, const ResolvedConfig& config,
                 std::uint64_t episode_seed);

  /// Executes `action`, senses and updates the map. `local_goal` (episode
  /// frame) is the reference for the local reward; the episode goal is used
  /// when absent.
  StepRecord apply(Action action, std::optional<Point2> local_goal = std::nullopt);

  const Pose& true_pose() const { return true_pose_; }
  const Pose& belief() const { return belief_; }
  const GlobalMap& map() const { return map_; }
  const DepthImage& restored_depth() const { return depth_; }
  const GroundTruthMap& ground_truth() const { return ground_truth_; }
  const EpisodeFrame& frame() const { return frame_; }
  const EpisodeSpec& spec() const { return spec_; }
  const ResolvedConfig& config() const { return config_; }

  /// Goal in episode coordinates.
  Point2 goal() const { return spec_.goal_rel; }
  double true_goal_distance() const { return distance(true_pose_, spec_.goal_world()); }
  int steps() const { return steps_; }
  bool bumped() const { return bumped_; }
  double path_length() const { return path_length_; }
  std::int64_t map_accuracy() const { return accuracy_; }

 private:
  void sense();

  const Scenario& scenario_;
  EpisodeSpec spec_;
  ResolvedConfig config_;
  NoiseConfig noise_;
  EpisodeStreams streams_;
  OdometryState odometry_;
  Pose true_pose_;
  EpisodeFrame frame_;
  Pose belief_;
  GlobalMap map_;
  GroundTruthMap ground_truth_;
  DepthImage depth_;
  std::int64_t accuracy_ = 0;
  int steps_ = 0;
  bool bumped_ = false;
  double path_length_ = 0.0;
};

}  // namespace loconav
