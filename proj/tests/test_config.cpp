#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "loconav/config.hpp"
#include "loconav/errors.hpp"
#include "loconav/scenario.hpp"
#include "support.hpp"

using namespace loconav;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Profiles, LoconavDefaults) {
  const ResolvedConfig c = load_config("loconav", nullptr, {});
  EXPECT_DOUBLE_EQ(c.camera.camera_height, 0.60);
  EXPECT_DOUBLE_EQ(c.agent.camera_height, 0.60);
  EXPECT_NEAR(rad_to_deg(c.camera.hfov), 57.0, 1e-9);
  EXPECT_NEAR(rad_to_deg(c.camera.vfov), 86.0, 1e-9);
  EXPECT_EQ(c.camera.depth_min, 0.0);
  EXPECT_EQ(c.camera.depth_max, 5.0);
  EXPECT_EQ(c.thresholds.min, 0.3);
  EXPECT_EQ(c.thresholds.max, 0.6);
}

TEST(Profiles, SimulationDefault) {
  const ResolvedConfig c = load_config("simulation-default", nullptr, {});
  EXPECT_EQ(c.camera.depth_min, 0.0);
  EXPECT_EQ(c.camera.depth_max, 10.0);
  EXPECT_DOUBLE_EQ(c.camera.camera_height, 1.25);
  EXPECT_NEAR(rad_to_deg(c.camera.hfov), 90.0, 1e-9);
  EXPECT_EQ(c.thresholds.min, 0.2);
  EXPECT_EQ(c.thresholds.max, 1.5);
}

TEST(Profiles, ByteEqualToFixture) {
  nlohmann::json all = nlohmann::json::array();
  for (const Profile& p : builtin_profiles()) all.push_back(profile_to_json(p));
  const std::string fixture = read_file(loconav::testing::source_dir() / "tests/fixtures/builtin_profiles.json");
  EXPECT_EQ(all.dump(2) + "\n", fixture);
}

TEST(Profiles, UnknownProfile) {
  EXPECT_NE(error_of([] { load_config("turtlebot", nullptr, {}); }).find("simulation-default"), std::string::npos);
}

TEST(Load, NegativeCameraHeightCitesInvariant) {
  const std::string msg = error_of([] { load_config("loconav", nullptr, {{"camera_height", "-1"}}); });
  EXPECT_NE(msg.find("camera_height must be > 0"), std::string::npos) << msg;
}

TEST(Load, UnknownKeyListsValidKeys) {
  const std::string msg = error_of([] { load_config("loconav", nullptr, {{"camera_hieght", "0.5"}}); });
  EXPECT_NE(msg.find("camera_hieght"), std::string::npos);
  for (const std::string& key : config_keys()) EXPECT_NE(msg.find(key), std::string::npos) << key;
}

TEST(Load, TypeErrors) {
  EXPECT_THROW(load_config("loconav", nullptr, {{"max_steps", "12.5"}}), ConfigError);
  EXPECT_THROW(load_config("loconav", nullptr, {{"unknown_is_traversable", "maybe"}}), ConfigError);
  EXPECT_THROW(load_config("loconav", nullptr, {{"reward_sign", "sideways"}}), ConfigError);
  EXPECT_THROW(load_config("loconav", nullptr, {{"global_map_size", "500"}, {"policy_map_size", "240"}}),
               ConfigError);
  EXPECT_THROW(load_config("loconav", nullptr, {{"depth_dropout_base", "1.5"}}), ConfigError);
}

TEST(Load, PrecedenceProfileScenarioOverride) {
  Scenario s = loconav::testing::open_room();
  s.profile = "simulation-default";
  s.config = {{"camera_height", 0.9}, {"max_steps", 150}};
  const ResolvedConfig from_scenario = load_config("", &s, {});
  EXPECT_EQ(from_scenario.profile, "simulation-default");
  EXPECT_DOUBLE_EQ(from_scenario.camera.camera_height, 0.9);
  EXPECT_EQ(from_scenario.camera.depth_max, 10.0);
  EXPECT_EQ(from_scenario.planner.max_steps, 150);

  const ResolvedConfig overridden = load_config("loconav", &s, {{"camera_height", "0.7"}});
  EXPECT_EQ(overridden.profile, "loconav");
  EXPECT_DOUBLE_EQ(overridden.camera.camera_height, 0.7);
  EXPECT_EQ(overridden.camera.depth_max, 5.0);
  EXPECT_EQ(overridden.planner.max_steps, 150);
}

TEST(Load, NoiseSwitch) {
  Scenario s = loconav::testing::open_room();
  s.noise = NoiseConfig::calibrated();
  EXPECT_FALSE(load_config("loconav", &s, {}, false).effective_noise().depth.sigma0 > 0.0);
  EXPECT_GT(load_config("loconav", &s, {}, true).effective_noise().depth.sigma0, 0.0);
  EXPECT_TRUE(load_config("loconav", &s, {{"depth_sigma0", "0"}, {"depth_sigma2", "0"}}, true)
                  .effective_noise()
                  .depth.sigma0 == 0.0);
}

TEST(Serialize, ConfigRoundTripIsExact) {
  const ResolvedConfig c = load_config("loconav", nullptr, {{"turn_step_deg", "10"}, {"hfov_deg", "61.3"}});
  const nlohmann::json j = config_to_json(c);
  const ResolvedConfig back = config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(back.agent.turn_step, c.agent.turn_step);
  EXPECT_EQ(back.camera.hfov, c.camera.hfov);
  EXPECT_EQ(j.at("profile"), "loconav");
  for (const std::string& key : config_keys()) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Serialize, OverrideValueParsing) {
  EXPECT_EQ(parse_override_value("0.5"), nlohmann::json(0.5));
  EXPECT_EQ(parse_override_value("true"), nlohmann::json(true));
  EXPECT_EQ(parse_override_value("text"), nlohmann::json("text"));
}

TEST(Scenario, DeskLoadsAndValidates) {
  const Scenario s = load_scenario((loconav::testing::source_dir() / "scenarios/desk.json").string());
  EXPECT_EQ(s.episodes.size(), 5u);
  for (const char* id : {"A", "B", "C", "D", "E"}) {
    const EpisodeSpec& e = s.episode(id);
    ASSERT_TRUE(e.baseline.has_value()) << id;
  }
  EXPECT_NO_THROW(s.validate(load_config("", &s, {}).agent));
  EXPECT_EQ(s.episode("A").baseline->steps, 23);
  EXPECT_EQ(s.episode("A").baseline->time_s, 124.0);
  EXPECT_THROW(s.episode("Z"), std::invalid_argument);
}

TEST(Scenario, JsonRoundTripIsExact) {
  const Scenario s = load_scenario((loconav::testing::source_dir() / "scenarios/desk.json").string());
  const nlohmann::json j = scenario_to_json(s);
  const Scenario back = scenario_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(scenario_to_json(back), j);
  for (std::size_t i = 0; i < s.episodes.size(); ++i) {
    EXPECT_EQ(back.episodes[i].start, s.episodes[i].start);
    EXPECT_EQ(back.episodes[i].goal_rel, s.episodes[i].goal_rel);
  }
}

TEST(Scenario, RejectsBadInput) {
  Scenario s = loconav::testing::open_room();
  const AgentConfig agent;
  s.episodes[0].start = {4.9, 0.0, 0.0};
  EXPECT_THROW(s.validate(agent), std::invalid_argument);
  s.episodes[0].start = {0.0, 0.0, 0.0};
  s.episodes[0].goal_rel = {7.0, 0.0};
  EXPECT_THROW(s.validate(agent), std::invalid_argument);

  nlohmann::json j = scenario_to_json(loconav::testing::open_room());
  j["bogus"] = 1;
  EXPECT_THROW(scenario_from_json(j), ConfigError);
}

TEST(Scenario, CanonicalIsAFixedPoint) {
  Scenario s = loconav::testing::open_room();
  s.episodes[0].start = {0.1, 0.2, 0.7};
  const Scenario c = canonical_scenario(s);
  EXPECT_EQ(scenario_to_json(canonical_scenario(c)), scenario_to_json(c));
  EXPECT_EQ(canonical_scenario(c).episodes[0].start, c.episodes[0].start);
}
