#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "loconav/mapping.hpp"
#include "loconav/nav.hpp"
#include "loconav/noise.hpp"
#include "loconav/scenario.hpp"
#include "loconav/sensors.hpp"
#include "loconav/world.hpp"

namespace loconav {

/// Camera and obstacle-band settings of one robot or simulator, in degrees and meters.
struct Profile {
  std::string name;
  double camera_height = 0.0;
  double rgb_hfov_deg = 0.0;  // recorded for completeness; nothing renders RGB
  double rgb_vfov_deg = 0.0;
  double depth_hfov_deg = 0.0;
  double depth_vfov_deg = 0.0;
  double depth_min = 0.0;
  double depth_max = 0.0;
  double obstacle_height_min = 0.0;
  double obstacle_height_max = 0.0;
};

std::span<const Profile> builtin_profiles();
const Profile& builtin_profile(std::string_view name);
nlohmann::json profile_to_json(const Profile& profile);

struct EvalConfig {
  /// Simulated duration of one action (124 s / 23 steps of the reference human run).
  double seconds_per_step = 5.4;
};

struct ResolvedConfig {
  std::string profile = "loconav";
  AgentConfig agent;
  CameraIntrinsics camera;
  HeightThresholds thresholds;
  MapConfig map;
  PlannerConfig planner;
  NoiseConfig noise = NoiseConfig::calibrated();
  EvalConfig eval;
  bool noise_enabled = true;

  NoiseConfig effective_noise() const { return noise_enabled ? noise : NoiseConfig::off(); }
  void validate() const;
};

/// Every key accepted in a scenario "config" block or as a --key=value override.
std::vector<std::string> config_keys();

/// Sets one key; unknown keys raise ConfigError listing the valid ones.
void apply_setting(ResolvedConfig& cfg, const std::string& key, const nlohmann::json& value);

/// Flat key -> value view, echoed into every log.
nlohmann::json config_to_json(const ResolvedConfig& cfg);
ResolvedConfig config_from_json(const nlohmann::json& flat);
/// Fixed point of serialize/parse, so logged configs reload bit-identically.
ResolvedConfig canonical_config(const ResolvedConfig& cfg);

void apply_profile(ResolvedConfig& cfg, const Profile& profile);

/// Precedence: built-in profile < scenario file < overrides; `noise` (when
/// given) switches every noise channel on or off last. An empty profile name
/// falls back to the scenario's profile, then to "loconav".
ResolvedConfig load_config(std::string_view profile, const Scenario* scenario,
                           const std::vector<std::pair<std::string, std::string>>& overrides,
                           std::optional<bool> noise = std::nullopt);

/// Parses an override string: JSON literal if it is one, otherwise a bare string.
nlohmann::json parse_override_value(const std::string& text);

}  // namespace loconav
