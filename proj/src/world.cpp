#include "loconav/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <fmt/core.h>

#include "loconav/errors.hpp"

namespace loconav {

void AgentConfig::validate() const {
  if (!(base_radius > 0.0)) throw ConfigError(fmt::format("base_radius must be > 0 (got {})", base_radius));
  if (!(camera_height > 0.0))
    throw ConfigError(fmt::format("camera_height must be > 0 (got {})", camera_height));
  if (!(forward_step > 0.0)) throw ConfigError(fmt::format("forward_step must be > 0 (got {})", forward_step));
  if (!(turn_step > 0.0)) throw ConfigError(fmt::format("turn_step must be > 0 (got {})", turn_step));
}

const char* to_string(Action action) {
  switch (action) {
    case Action::Forward: return "forward";
    case Action::TurnLeft: return "turn_left";
    case Action::TurnRight: return "turn_right";
    case Action::Stop: return "stop";
  }
  return "?";
}

Action action_from_string(std::string_view name) {
  if (name == "forward") return Action::Forward;
  if (name == "turn_left") return Action::TurnLeft;
  if (name == "turn_right") return Action::TurnRight;
  if (name == "stop") return Action::Stop;
  throw ContractError(fmt::format("unknown action '{}'", name));
}

namespace {

double point_box_distance(Point2 p, const Box& box) {
  const double dx = std::max({box.min_x - p.x, 0.0, p.x - box.max_x});
  const double dy = std::max({box.min_y - p.y, 0.0, p.y - box.max_y});
  return std::hypot(dx, dy);
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

// Liang-Barsky clip of segment a->b against the closed rectangle.
bool segment_hits_box(Point2 a, Point2 b, const Box& box) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const std::array<double, 4> p{-dx, dx, -dy, dy};
  const std::array<double, 4> q{a.x - box.min_x, box.max_x - a.x, a.y - box.min_y, box.max_y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return false;
  }
  return true;
}

bool disc_outside_bounds(Point2 c, double r, const Bounds& b) {
  return c.x - r < b.min_x || c.x + r > b.max_x || c.y - r < b.min_y || c.y + r > b.max_y;
}

double truncated_gaussian(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::clamp(gaussian(rng, sigma), -3.0 * sigma, 3.0 * sigma);
}

}  // namespace

double segment_box_distance(Point2 a, Point2 b, const Box& box) {
  if (segment_hits_box(a, b, box)) return 0.0;
  double best = std::min(point_box_distance(a, box), point_box_distance(b, box));
  const std::array<Point2, 4> corners{Point2{box.min_x, box.min_y}, Point2{box.max_x, box.min_y},
                                      Point2{box.max_x, box.max_y}, Point2{box.min_x, box.max_y}};
  for (const Point2& c : corners) best = std::min(best, point_segment_distance(c, a, b));
  return best;
}

bool collides(const Pose& pose, const AgentConfig& config, const Scenario& scenario) {
  const Point2 c = pose.position();
  if (disc_outside_bounds(c, config.base_radius, scenario.bounds)) return true;
  return std::any_of(scenario.obstacles.begin(), scenario.obstacles.end(),
                     [&](const Box& box) { return point_box_distance(c, box) < config.base_radius; });
}

bool sweep_collides(Point2 from, Point2 to, double radius, const Scenario& scenario) {
  if (disc_outside_bounds(from, radius, scenario.bounds) || disc_outside_bounds(to, radius, scenario.bounds))
    return true;
  return std::any_of(scenario.obstacles.begin(), scenario.obstacles.end(),
                     [&](const Box& box) { return segment_box_distance(from, to, box) < radius; });
}

StepOutcome step(const Pose& pose, Action action, const AgentConfig& config, const NoiseConfig& noise,
                 const Scenario& scenario, Rng& rng) {
  if (!scenario.bounds.contains(pose.position()))
    throw PreconditionError(fmt::format("pose ({}, {}) lies outside the scenario bounds", pose.x, pose.y));
  if (collides(pose, config, scenario))
    throw PreconditionError(fmt::format("pose ({}, {}) is in collision", pose.x, pose.y));

  switch (action) {
    case Action::Stop:
      return {pose, false, {}};
    case Action::TurnLeft:
    case Action::TurnRight: {
      const double sign = action == Action::TurnLeft ? 1.0 : -1.0;
      const double turn = sign * config.turn_step + truncated_gaussian(rng, noise.actuation_sigma_rot);
      Pose next = pose;
      next.theta = normalize_angle(pose.theta + turn);
      return {next, false, {0.0, 0.0, normalize_angle(next.theta - pose.theta)}};
    }
    case Action::Forward:
      break;
  }

  const Point2 from = pose.position();
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  const StepOutcome blocked{pose, true, {}};

  const Point2 nominal{pose.x + config.forward_step * c, pose.y + config.forward_step * s};
  if (sweep_collides(from, nominal, config.base_radius, scenario)) return blocked;

  const bool noisy = noise.actuation_sigma_lin > 0.0 || noise.actuation_sigma_rot > 0.0;
  for (int attempt = 0; attempt <= (noisy ? kMaxActuationResamples : 0); ++attempt) {
    const double length = config.forward_step + truncated_gaussian(rng, noise.actuation_sigma_lin);
    const double yaw = truncated_gaussian(rng, noise.actuation_sigma_rot);
    const Point2 to = noisy ? Point2{pose.x + length * c, pose.y + length * s} : nominal;
    if (sweep_collides(from, to, config.base_radius, scenario)) continue;
    Pose next{to.x, to.y, normalize_angle(pose.theta + yaw)};
    return {next, false, {next.x - pose.x, next.y - pose.y, normalize_angle(next.theta - pose.theta)}};
  }
  return blocked;
}

Pose read_odometry(const Pose& true_pose, const NoiseConfig& noise, OdometryState& state, Rng& rng) {
  if (noise.odometry_drift_sigma > 0.0) {
    const double per_axis = noise.odometry_drift_sigma / std::sqrt(2.0);
    state.drift_x += gaussian(rng, per_axis);
    state.drift_y += gaussian(rng, per_axis);
  }
  return {true_pose.x + state.drift_x, true_pose.y + state.drift_y, true_pose.theta};
}

}  // namespace loconav
