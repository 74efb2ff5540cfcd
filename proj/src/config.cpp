#include "loconav/config.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include <fmt/core.h>
#include <fmt/format.h>

#include "loconav/errors.hpp"

namespace loconav {

namespace {

const std::array<Profile, 2> kProfiles{{
    {"simulation-default", 1.25, 90.0, 90.0, 90.0, 90.0, 0.0, 10.0, 0.2, 1.5},
    {"loconav", 0.60, 70.0, 90.0, 57.0, 86.0, 0.0, 5.0, 0.3, 0.6},
}};

struct Setting {
  const char* key;
  std::function<nlohmann::json(const ResolvedConfig&)> get;
  std::function<void(ResolvedConfig&, const nlohmann::json&)> set;
};

double num(const nlohmann::json& v, const char* key) {
  if (!v.is_number()) throw ConfigError(fmt::format("{} expects a number (got {})", key, v.dump()));
  return v.get<double>();
}

int whole(const nlohmann::json& v, const char* key) {
  const double d = num(v, key);
  if (d != static_cast<int>(d)) throw ConfigError(fmt::format("{} expects an integer (got {})", key, v.dump()));
  return static_cast<int>(d);
}

#define LOCONAV_DOUBLE(KEY, FIELD)                                                     \
  Setting {                                                                            \
    KEY, [](const ResolvedConfig& c) { return nlohmann::json(c.FIELD); },              \
        [](ResolvedConfig& c, const nlohmann::json& v) { c.FIELD = num(v, KEY); }      \
  }
#define LOCONAV_INT(KEY, FIELD)                                                        \
  Setting {                                                                            \
    KEY, [](const ResolvedConfig& c) { return nlohmann::json(c.FIELD); },              \
        [](ResolvedConfig& c, const nlohmann::json& v) { c.FIELD = whole(v, KEY); }    \
  }
#define LOCONAV_DEGREES(KEY, FIELD)                                                           \
  Setting {                                                                                   \
    KEY, [](const ResolvedConfig& c) { return nlohmann::json(rad_to_deg(c.FIELD)); },         \
        [](ResolvedConfig& c, const nlohmann::json& v) { c.FIELD = deg_to_rad(num(v, KEY)); } \
  }

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table{
      {"camera_height", [](const ResolvedConfig& c) { return nlohmann::json(c.camera.camera_height); },
       [](ResolvedConfig& c, const nlohmann::json& v) {
         c.camera.camera_height = num(v, "camera_height");
         c.agent.camera_height = c.camera.camera_height;
       }},
      LOCONAV_DEGREES("hfov_deg", camera.hfov),
      LOCONAV_DEGREES("vfov_deg", camera.vfov),
      LOCONAV_DOUBLE("depth_min", camera.depth_min),
      LOCONAV_DOUBLE("depth_max", camera.depth_max),
      LOCONAV_INT("image_width", camera.width),
      LOCONAV_INT("image_height", camera.height),
      LOCONAV_DOUBLE("obstacle_height_min", thresholds.min),
      LOCONAV_DOUBLE("obstacle_height_max", thresholds.max),
      LOCONAV_DOUBLE("base_radius", agent.base_radius),
      LOCONAV_DOUBLE("forward_step", agent.forward_step),
      LOCONAV_DEGREES("turn_step_deg", agent.turn_step),
      LOCONAV_INT("ego_map_size", map.ego_side),
      LOCONAV_INT("global_map_size", map.global_side),
      LOCONAV_INT("policy_map_size", map.policy_side),
      LOCONAV_DOUBLE("map_resolution", map.resolution),
      LOCONAV_DOUBLE("local_goal_radius", planner.local_goal_radius),
      LOCONAV_DOUBLE("goal_threshold", planner.goal_threshold),
      LOCONAV_DOUBLE("inflation_radius", planner.inflation_radius),
      {"unknown_is_traversable",
       [](const ResolvedConfig& c) { return nlohmann::json(c.planner.unknown_is_traversable); },
       [](ResolvedConfig& c, const nlohmann::json& v) {
         if (!v.is_boolean()) throw ConfigError("unknown_is_traversable expects true or false");
         c.planner.unknown_is_traversable = v.get<bool>();
       }},
      LOCONAV_INT("max_steps", planner.max_steps),
      LOCONAV_DOUBLE("collision_penalty", planner.alpha),
      {"reward_sign",
       [](const ResolvedConfig& c) {
         return nlohmann::json(c.planner.reward_sign == RewardSign::Text ? "text" : "literal");
       },
       [](ResolvedConfig& c, const nlohmann::json& v) {
         const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
         if (s == "text") c.planner.reward_sign = RewardSign::Text;
         else if (s == "literal") c.planner.reward_sign = RewardSign::Literal;
         else throw ConfigError(fmt::format("reward_sign must be 'text' or 'literal' (got {})", s));
       }},
      LOCONAV_INT("max_replan_failures", planner.max_replan_failures),
      LOCONAV_INT("max_consecutive_bumps", planner.max_consecutive_bumps),
      LOCONAV_DEGREES("bearing_tolerance_deg", planner.bearing_tolerance),
      LOCONAV_DOUBLE("seconds_per_step", eval.seconds_per_step),
      LOCONAV_DOUBLE("actuation_sigma_lin", noise.actuation_sigma_lin),
      LOCONAV_DEGREES("actuation_sigma_rot_deg", noise.actuation_sigma_rot),
      LOCONAV_DOUBLE("odometry_drift_sigma", noise.odometry_drift_sigma),
      LOCONAV_DOUBLE("depth_sigma0", noise.depth.sigma0),
      LOCONAV_DOUBLE("depth_sigma2", noise.depth.sigma2),
      LOCONAV_DOUBLE("depth_dropout_base", noise.depth.dropout_base),
      LOCONAV_DOUBLE("depth_dropout_edge", noise.depth.dropout_edge),
      LOCONAV_DOUBLE("depth_edge_jump", noise.depth.edge_jump),
  };
  return table;
}

#undef LOCONAV_DOUBLE
#undef LOCONAV_INT
#undef LOCONAV_DEGREES

}  // namespace

std::span<const Profile> builtin_profiles() { return kProfiles; }

const Profile& builtin_profile(std::string_view name) {
  for (const Profile& p : kProfiles)
    if (p.name == name) return p;
  throw ConfigError(fmt::format("unknown profile '{}' (valid: simulation-default, loconav)", name));
}

nlohmann::json profile_to_json(const Profile& p) {
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["camera_height"] = p.camera_height;
  j["rgb_fov_deg"] = {{"h", p.rgb_hfov_deg}, {"v", p.rgb_vfov_deg}};
  j["depth_fov_deg"] = {{"h", p.depth_hfov_deg}, {"v", p.depth_vfov_deg}};
  j["depth_range"] = {p.depth_min, p.depth_max};
  j["obstacle_height_thresholds"] = {p.obstacle_height_min, p.obstacle_height_max};
  return nlohmann::json::parse(j.dump());
}

void ResolvedConfig::validate() const {
  agent.validate();
  camera.validate();
  if (std::abs(agent.camera_height - camera.camera_height) > 1e-12)
    throw ConfigError("agent and camera heights disagree");
  if (!(thresholds.min >= 0.0) || !(thresholds.max > thresholds.min))
    throw ConfigError(fmt::format("obstacle height thresholds must satisfy 0 <= min < max (got [{}, {}])",
                                  thresholds.min, thresholds.max));
  map.validate();
  planner.validate();
  noise.validate();
  if (!(eval.seconds_per_step > 0.0))
    throw ConfigError(fmt::format("seconds_per_step must be > 0 (got {})", eval.seconds_per_step));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Setting& s : settings()) keys.emplace_back(s.key);
  return keys;
}

void apply_setting(ResolvedConfig& cfg, const std::string& key, const nlohmann::json& value) {
  const auto& table = settings();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Setting& s) { return key == s.key; });
  if (it == table.end())
    throw ConfigError(fmt::format("unknown configuration key '{}'; valid keys: {}", key,
                                  fmt::join(config_keys(), ", ")));
  it->set(cfg, value);
}

nlohmann::json config_to_json(const ResolvedConfig& cfg) {
  nlohmann::json j;
  j["profile"] = cfg.profile;
  j["noise_enabled"] = cfg.noise_enabled;
  for (const Setting& s : settings()) j[s.key] = s.get(cfg);
  return j;
}

namespace {

ResolvedConfig parse_config(const nlohmann::json& flat) {
  ResolvedConfig cfg;
  for (const auto& [key, value] : flat.items()) {
    if (key == "profile") cfg.profile = value.get<std::string>();
    else if (key == "noise_enabled") cfg.noise_enabled = value.get<bool>();
    else apply_setting(cfg, key, value);
  }
  return cfg;
}

}  // namespace

ResolvedConfig canonical_config(const ResolvedConfig& cfg) {
  nlohmann::json doc = config_to_json(cfg);
  for (int i = 0; i < 8; ++i) {
    ResolvedConfig next = parse_config(doc);
    nlohmann::json again = config_to_json(next);
    if (again == doc) return next;
    doc = std::move(again);
  }
  throw ConfigError("configuration serialization does not converge");
}

ResolvedConfig config_from_json(const nlohmann::json& flat) {
  ResolvedConfig cfg = canonical_config(parse_config(flat));
  cfg.validate();
  return cfg;
}

void apply_profile(ResolvedConfig& cfg, const Profile& p) {
  cfg.profile = p.name;
  cfg.agent.camera_height = p.camera_height;
  cfg.camera.camera_height = p.camera_height;
  cfg.camera.hfov = deg_to_rad(p.depth_hfov_deg);
  cfg.camera.vfov = deg_to_rad(p.depth_vfov_deg);
  cfg.camera.depth_min = p.depth_min;
  cfg.camera.depth_max = p.depth_max;
  cfg.thresholds = {p.obstacle_height_min, p.obstacle_height_max};
}

nlohmann::json parse_override_value(const std::string& text) {
  auto parsed = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) return nlohmann::json(text);
  return parsed;
}

ResolvedConfig load_config(std::string_view profile, const Scenario* scenario,
                           const std::vector<std::pair<std::string, std::string>>& overrides,
                           std::optional<bool> noise) {
  std::string name(profile);
  if (name.empty() && scenario) name = scenario->profile;
  if (name.empty()) name = "loconav";

  ResolvedConfig cfg;
  apply_profile(cfg, builtin_profile(name));
  if (scenario) {
    cfg.noise = scenario->noise;
    for (const auto& [key, value] : scenario->config.items()) apply_setting(cfg, key, value);
  }
  for (const auto& [key, value] : overrides) apply_setting(cfg, key, parse_override_value(value));
  if (noise) cfg.noise_enabled = *noise;
  cfg = canonical_config(cfg);
  cfg.validate();
  return cfg;
}

}  // namespace loconav
