#pragma once

#include <cmath>
#include <numbers>

namespace loconav {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Planar pose: position in meters, heading in radians measured CCW from +x.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Point2 position() const { return {x, y}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

inline double distance(const Pose& a, Point2 b) { return distance(a.position(), b); }

/// Expresses a point given in the frame of `frame` (x forward, y left) in world coordinates.
inline Point2 local_to_world(const Pose& frame, Point2 local) {
  const double c = std::cos(frame.theta);
  const double s = std::sin(frame.theta);
  return {frame.x + c * local.x - s * local.y, frame.y + s * local.x + c * local.y};
}

}  // namespace loconav
