#include "loconav/scenario.hpp"

#include <fstream>

#include <fmt/core.h>

#include "loconav/errors.hpp"
#include "loconav/world.hpp"

namespace loconav {

void DepthNoiseConfig::validate() const {
  if (sigma0 < 0.0 || sigma2 < 0.0) throw ConfigError("depth noise sigmas must be >= 0");
  if (dropout_base < 0.0 || dropout_base > 1.0 || dropout_edge < 0.0 || dropout_edge > 1.0)
    throw ConfigError("depth dropout probabilities must lie in [0, 1]");
  if (!(edge_jump > 0.0)) throw ConfigError("depth edge_jump must be > 0");
}

NoiseConfig NoiseConfig::calibrated() {
  NoiseConfig n;
  n.actuation_sigma_lin = 0.01;
  n.actuation_sigma_rot = deg_to_rad(0.5);
  n.odometry_drift_sigma = 0.002;
  n.depth.sigma0 = 0.005;
  n.depth.sigma2 = 0.0025;
  n.depth.dropout_base = 0.01;
  n.depth.dropout_edge = 0.05;
  return n;
}

void NoiseConfig::validate() const {
  if (actuation_sigma_lin < 0.0 || actuation_sigma_rot < 0.0 || odometry_drift_sigma < 0.0)
    throw ConfigError("noise sigmas must be >= 0");
  depth.validate();
}

void Box::validate() const {
  if (!(max_x > min_x) || !(max_y > min_y))
    throw ContractError(fmt::format("box [{}, {}]x[{}, {}] has empty footprint", min_x, max_x, min_y, max_y));
  if (!(height > 0.0)) throw ContractError(fmt::format("box height must be > 0 (got {})", height));
}

void HumanBaseline::validate() const {
  if (!(length_m > 0.0) || !(time_s > 0.0) || steps <= 0)
    throw ContractError("human baseline values must all be positive");
}

const EpisodeSpec& Scenario::episode(const std::string& id) const {
  for (const auto& e : episodes)
    if (e.id == id) return e;
  throw ContractError(fmt::format("scenario has no episode '{}'", id));
}

void Scenario::validate(const AgentConfig& agent) const {
  if (!(bounds.area() > 0.0) || !(bounds.max_x > bounds.min_x)) throw ContractError("scenario bounds have zero area");
  for (const Box& box : obstacles) {
    box.validate();
    if (box.min_x < bounds.min_x || box.max_x > bounds.max_x || box.min_y < bounds.min_y ||
        box.max_y > bounds.max_y)
      throw ContractError(
          fmt::format("obstacle [{}, {}]x[{}, {}] exceeds bounds", box.min_x, box.max_x, box.min_y, box.max_y));
  }
  for (const EpisodeSpec& e : episodes) {
    if (!bounds.contains(e.start.position()) || collides(e.start, agent, *this))
      throw ContractError(fmt::format("episode '{}' starts in collision or outside bounds", e.id));
    if (!bounds.contains(e.goal_world()))
      throw ContractError(fmt::format("episode '{}' goal lies outside the bounds", e.id));
    if (e.baseline) e.baseline->validate();
  }
  noise.validate();
}

nlohmann::json baseline_to_json(const HumanBaseline& b) {
  return {{"length_m", b.length_m}, {"time_s", b.time_s}, {"steps", b.steps}};
}

HumanBaseline baseline_from_json(const nlohmann::json& j) {
  HumanBaseline b{j.at("length_m").get<double>(), j.at("time_s").get<double>(), j.at("steps").get<int>()};
  b.validate();
  return b;
}

namespace {

NoiseConfig noise_from_json(const nlohmann::json& j) {
  NoiseConfig n = NoiseConfig::calibrated();
  for (const auto& [key, value] : j.items()) {
    const double v = value.get<double>();
    if (key == "actuation_sigma_lin") n.actuation_sigma_lin = v;
    else if (key == "actuation_sigma_rot_deg") n.actuation_sigma_rot = deg_to_rad(v);
    else if (key == "odometry_drift_sigma") n.odometry_drift_sigma = v;
    else if (key == "depth_sigma0") n.depth.sigma0 = v;
    else if (key == "depth_sigma2") n.depth.sigma2 = v;
    else if (key == "depth_dropout_base") n.depth.dropout_base = v;
    else if (key == "depth_dropout_edge") n.depth.dropout_edge = v;
    else if (key == "depth_edge_jump") n.depth.edge_jump = v;
    else
      throw ConfigError(fmt::format(
          "unknown noise key '{}' (valid: actuation_sigma_lin, actuation_sigma_rot_deg, odometry_drift_sigma, "
          "depth_sigma0, depth_sigma2, depth_dropout_base, depth_dropout_edge, depth_edge_jump)",
          key));
  }
  return n;
}

nlohmann::json noise_to_json(const NoiseConfig& n) {
  return {{"actuation_sigma_lin", n.actuation_sigma_lin},
          {"actuation_sigma_rot_deg", rad_to_deg(n.actuation_sigma_rot)},
          {"odometry_drift_sigma", n.odometry_drift_sigma},
          {"depth_sigma0", n.depth.sigma0},
          {"depth_sigma2", n.depth.sigma2},
          {"depth_dropout_base", n.depth.dropout_base},
          {"depth_dropout_edge", n.depth.dropout_edge},
          {"depth_edge_jump", n.depth.edge_jump}};
}

Scenario parse_scenario(const nlohmann::json& doc) {
  static const std::vector<std::string> kKeys{"bounds", "obstacles", "episodes", "noise", "seed",
                                              "floor",  "profile",   "config",   "name"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      throw ConfigError(fmt::format("unknown scenario key '{}' (valid: bounds, obstacles, episodes, noise, seed, "
                                    "floor, profile, config, name)",
                                    key));
  }
  Scenario s;
  const auto& b = doc.at("bounds");
  s.bounds = {b.at("min_x").get<double>(), b.at("min_y").get<double>(), b.at("max_x").get<double>(),
              b.at("max_y").get<double>()};
  for (const auto& o : doc.value("obstacles", nlohmann::json::array())) {
    s.obstacles.push_back({o.at("min_x").get<double>(), o.at("min_y").get<double>(), o.at("max_x").get<double>(),
                           o.at("max_y").get<double>(), o.at("height").get<double>()});
  }
  for (const auto& e : doc.value("episodes", nlohmann::json::array())) {
    EpisodeSpec spec;
    spec.id = e.at("id").get<std::string>();
    const auto& st = e.at("start");
    spec.start = {st.at("x").get<double>(), st.at("y").get<double>(),
                  normalize_angle(deg_to_rad(st.value("theta_deg", 0.0)))};
    const auto& g = e.at("goal_rel");
    spec.goal_rel = {g.at("x").get<double>(), g.at("y").get<double>()};
    if (e.contains("baseline") && !e.at("baseline").is_null()) spec.baseline = baseline_from_json(e.at("baseline"));
    s.episodes.push_back(std::move(spec));
  }
  if (doc.contains("noise")) s.noise = noise_from_json(doc.at("noise"));
  s.seed = doc.value("seed", std::uint64_t{0});
  s.floor = doc.value("floor", true);
  s.profile = doc.value("profile", std::string{});
  if (doc.contains("config")) s.config = doc.at("config");
  return s;
}

}  // namespace

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json doc;
  doc["bounds"] = {{"min_x", s.bounds.min_x}, {"min_y", s.bounds.min_y}, {"max_x", s.bounds.max_x},
                   {"max_y", s.bounds.max_y}};
  doc["obstacles"] = nlohmann::json::array();
  for (const Box& b : s.obstacles)
    doc["obstacles"].push_back(
        {{"min_x", b.min_x}, {"min_y", b.min_y}, {"max_x", b.max_x}, {"max_y", b.max_y}, {"height", b.height}});
  doc["episodes"] = nlohmann::json::array();
  for (const EpisodeSpec& e : s.episodes) {
    nlohmann::json j{{"id", e.id},
                     {"start", {{"x", e.start.x}, {"y", e.start.y}, {"theta_deg", rad_to_deg(e.start.theta)}}},
                     {"goal_rel", {{"x", e.goal_rel.x}, {"y", e.goal_rel.y}}}};
    if (e.baseline) j["baseline"] = baseline_to_json(*e.baseline);
    doc["episodes"].push_back(std::move(j));
  }
  doc["noise"] = noise_to_json(s.noise);
  doc["seed"] = s.seed;
  doc["floor"] = s.floor;
  if (!s.profile.empty()) doc["profile"] = s.profile;
  if (!s.config.empty()) doc["config"] = s.config;
  return doc;
}

Scenario canonical_scenario(const Scenario& scenario) {
  // Degree/radian conversions are not exact, so iterate until serializing
  // and parsing reproduce the same document.
  nlohmann::json doc = scenario_to_json(scenario);
  for (int i = 0; i < 8; ++i) {
    Scenario next = parse_scenario(doc);
    nlohmann::json again = scenario_to_json(next);
    if (again == doc) return next;
    doc = std::move(again);
  }
  throw ContractError("scenario serialization does not converge");
}

Scenario scenario_from_json(const nlohmann::json& doc) { return canonical_scenario(parse_scenario(doc)); }

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open scenario file '{}'", path));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return scenario_from_json(doc);
}

}  // namespace loconav
