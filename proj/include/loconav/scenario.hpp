#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loconav/geometry.hpp"
#include "loconav/noise.hpp"

namespace loconav {

struct AgentConfig;

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double area() const { return (max_x - min_x) * (max_y - min_y); }
  bool contains(Point2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

/// Axis-aligned footprint extruded from the floor up to `height`.
struct Box {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
  double height = 0.0;

  void validate() const;
};

/// Reference effort of a human operator on one path.
struct HumanBaseline {
  double length_m = 0.0;
  double time_s = 0.0;
  int steps = 0;

  void validate() const;
  friend bool operator==(const HumanBaseline&, const HumanBaseline&) = default;
};

/// Navigation task. The goal is relative to the start pose: x along the
/// initial heading, y to its left.
struct EpisodeSpec {
  std::string id;
  Pose start;
  Point2 goal_rel;
  std::optional<HumanBaseline> baseline;

  Point2 goal_world() const { return local_to_world(start, goal_rel); }
};

struct Scenario {
  Bounds bounds;
  std::vector<Box> obstacles;
  std::vector<EpisodeSpec> episodes;
  NoiseConfig noise = NoiseConfig::calibrated();
  std::uint64_t seed = 0;
  /// Whether the floor plane returns depth. Floor returns are what the mapper
  /// carves free space from.
  bool floor = true;
  std::string profile;
  /// Raw configuration overrides carried by the file ("config" key).
  nlohmann::json config = nlohmann::json::object();

  const EpisodeSpec& episode(const std::string& id) const;

  /// Checks bounds, obstacle containment and that every episode start is
  /// collision-free and every goal lies inside the bounds.
  void validate(const AgentConfig& agent) const;
};

/// Scenario file I/O. Lengths in meters, angles in degrees.
Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);
/// Fixed point of serialize/parse, so a saved scenario reloads bit-identically.
Scenario canonical_scenario(const Scenario& scenario);
Scenario load_scenario(const std::string& path);

nlohmann::json baseline_to_json(const HumanBaseline& b);
HumanBaseline baseline_from_json(const nlohmann::json& j);

}  // namespace loconav
