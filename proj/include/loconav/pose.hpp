#pragma once

#include <span>

#include <Eigen/Core>

#include "loconav/geometry.hpp"
#include "loconav/world.hpp"

namespace loconav {

/// Coordinate frame anchored at the odometry reading taken at episode start.
struct EpisodeFrame {
  Pose chi0;
  /// Homogeneous transform episode -> odometry: rotation by theta0, translation (x0, y0).
  Eigen::Matrix3d A;
  Eigen::Matrix3d A_inv;
};

EpisodeFrame make_frame(const Pose& chi0);

/// Odometry reading -> episode coordinates; exactly (0, 0, 0) at chi0.
Pose to_episode(const EpisodeFrame& frame, const Pose& chi_t);

/// Episode coordinates -> odometry frame.
Pose from_episode(const EpisodeFrame& frame, const Pose& episode_pose);

/// One displacement hypothesis with an unnormalized confidence (logit).
struct DisplacementEstimate {
  Displacement delta;
  double confidence = 0.0;
};

/// Softmax-weighted combination of the estimates; the heading uses a weighted
/// circular mean so hypotheses near +-pi combine correctly.
Displacement fuse(std::span<const DisplacementEstimate> estimates);

}  // namespace loconav
