#include "loconav/pose.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "loconav/errors.hpp"

namespace loconav {

EpisodeFrame make_frame(const Pose& chi0) {
  const double c = std::cos(chi0.theta);
  const double s = std::sin(chi0.theta);
  EpisodeFrame f;
  f.chi0 = chi0;
  f.A << c, -s, chi0.x,
         s,  c, chi0.y,
         0,  0, 1;
  // Rigid inverse: [R^T, -R^T t].
  f.A_inv << c, s, -(c * chi0.x + s * chi0.y),
            -s, c, -(-s * chi0.x + c * chi0.y),
             0, 0, 1;
  return f;
}

Pose to_episode(const EpisodeFrame& frame, const Pose& chi_t) {
  // Same product as A_inv * (x, y, 1), written relative to t0 so chi0 maps to exact zeros.
  const double c = frame.A(0, 0);
  const double s = frame.A(1, 0);
  const double dx = chi_t.x - frame.chi0.x;
  const double dy = chi_t.y - frame.chi0.y;
  return {c * dx + s * dy, -s * dx + c * dy, normalize_angle(chi_t.theta - frame.chi0.theta)};
}

Pose from_episode(const EpisodeFrame& frame, const Pose& episode_pose) {
  const Eigen::Vector3d p = frame.A * Eigen::Vector3d(episode_pose.x, episode_pose.y, 1.0);
  return {p.x(), p.y(), normalize_angle(episode_pose.theta + frame.chi0.theta)};
}

Displacement fuse(std::span<const DisplacementEstimate> estimates) {
  if (estimates.empty()) throw ContractError("fuse needs at least one displacement estimate");
  if (estimates.size() == 1) {
    Displacement d = estimates.front().delta;
    d.dtheta = normalize_angle(d.dtheta);
    return d;
  }
  double top = estimates.front().confidence;
  for (const auto& e : estimates) top = std::max(top, e.confidence);
  std::vector<double> w;
  w.reserve(estimates.size());
  double total = 0.0;
  for (const auto& e : estimates) {
    w.push_back(std::exp(e.confidence - top));
    total += w.back();
  }
  Displacement out;
  double sin_sum = 0.0;
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double a = w[i] / total;
    out.dx += a * estimates[i].delta.dx;
    out.dy += a * estimates[i].delta.dy;
    sin_sum += a * std::sin(estimates[i].delta.dtheta);
    cos_sum += a * std::cos(estimates[i].delta.dtheta);
  }
  out.dtheta = normalize_angle(std::atan2(sin_sum, cos_sum));
  return out;
}

}  // namespace loconav
