#pragma once

#include <filesystem>
#include <string>

#include "loconav/scenario.hpp"

namespace loconav::testing {

/// Empty square room [-half, half]^2 with one episode at the origin.
inline Scenario open_room(double half = 5.0) {
  Scenario s;
  s.bounds = {-half, -half, half, half};
  s.noise = NoiseConfig::off();
  EpisodeSpec e;
  e.id = "E";
  e.goal_rel = {1.0, 0.0};
  s.episodes.push_back(e);
  return s;
}

inline std::filesystem::path source_dir() { return LOCONAV_SOURCE_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("loconav_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace loconav::testing
