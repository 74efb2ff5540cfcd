#pragma once

#include <span>

#include "loconav/geometry.hpp"
#include "loconav/noise.hpp"
#include "loconav/rng.hpp"
#include "loconav/scenario.hpp"

namespace loconav {

struct AgentConfig {
  double base_radius = 0.2;
  double camera_height = 0.6;
  double forward_step = 0.25;
  double turn_step = deg_to_rad(15.0);

  void validate() const;
};

enum class Action { Forward, TurnLeft, TurnRight, Stop };

const char* to_string(Action action);
Action action_from_string(std::string_view name);

struct Displacement {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;

  friend bool operator==(const Displacement&, const Displacement&) = default;
};

struct StepOutcome {
  Pose pose;
  bool bump = false;
  Displacement displacement;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

/// Number of noisy forward samples tried before a step is declared blocked.
inline constexpr int kMaxActuationResamples = 8;

/// Minimum distance between segment [a, b] and the closed rectangle of `box`
/// (0 when they intersect).
double segment_box_distance(Point2 a, Point2 b, const Box& box);

/// True iff the disc of `config.base_radius` at the pose overlaps an obstacle
/// footprint or leaves the bounds. Exact tangency does not count.
bool collides(const Pose& pose, const AgentConfig& config, const Scenario& scenario);

/// Same test for the disc swept from `from` to `to`.
bool sweep_collides(Point2 from, Point2 to, double radius, const Scenario& scenario);

/// Advances the agent by one action. A forward move whose swept disc would hit
/// anything leaves the pose untouched and reports a bump; there is no sliding.
StepOutcome step(const Pose& pose, Action action, const AgentConfig& config,
                 const NoiseConfig& noise, const Scenario& scenario, Rng& rng);

/// Accumulated planar drift of the wheel odometry.
struct OdometryState {
  double drift_x = 0.0;
  double drift_y = 0.0;
};

/// Advances the drift random walk by one step (isotropic, RMS magnitude
/// `noise.odometry_drift_sigma`) and returns the drifted reading.
Pose read_odometry(const Pose& true_pose, const NoiseConfig& noise, OdometryState& state, Rng& rng);

}  // namespace loconav
