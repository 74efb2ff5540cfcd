#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "loconav/config.hpp"
#include "loconav/episode.hpp"
#include "loconav/scenario.hpp"

namespace loconav {

struct TrajectoryEntry {
  Pose pose;  // true pose after the action
  Action action = Action::Stop;
  bool bump = false;

  friend bool operator==(const TrajectoryEntry&, const TrajectoryEntry&) = default;
};

struct EpisodeResult {
  std::string episode_id;
  std::uint64_t trial = 0;
  bool success = false;
  bool hard_failure = false;
  int steps = 0;
  double wall_time_s = 0.0;
  bool bumped = false;
  double final_distance = 0.0;
  double path_length_m = 0.0;
  /// "stop", "max_steps", "replan_failures" or "bumps".
  std::string termination;
  std::vector<TrajectoryEntry> trajectory;
};

/// Line-delimited JSON log: one header record (resolved config, seed,
/// scenario), one record per step and a closing result record.
class EpisodeLogWriter {
 public:
  explicit EpisodeLogWriter(std::ostream& out) : out_(out) {}

  void header(const Scenario& scenario, const EpisodeSpec& spec, std::uint64_t seed, std::uint64_t trial,
              const ResolvedConfig& config);
  void step(const StepRecord& rec, const Pose& pose_true, std::optional<Point2> local_goal, std::size_t plan_length);
  void result(const EpisodeResult& result);

 private:
  std::ostream& out_;
};

/// Runs one autonomous episode from a blank map until Stop or a hard failure.
EpisodeResult run_episode(const Scenario& scenario, const EpisodeSpec& spec, std::uint64_t seed,
                          std::uint64_t trial, const ResolvedConfig& config, EpisodeLogWriter* log = nullptr);

/// Success weighted by min(1, baseline steps / agent steps); nullopt without a baseline.
std::optional<double> spl(std::span<const EpisodeResult> results, const std::optional<HumanBaseline>& baseline);

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n = 0;
};

/// Mean and standard error of the mean (sample deviation / sqrt(n); 0 for n = 1).
std::optional<MeanSem> mean_sem(std::span<const double> values);

struct PathReport {
  std::string path;
  std::size_t trials = 0;
  double sr = 0.0;
  std::optional<double> spl;
  double hfr = 0.0;
  std::optional<double> br;
  std::optional<MeanSem> abs_steps;
  std::optional<MeanSem> norm_steps;
  std::optional<MeanSem> abs_time;
  std::optional<MeanSem> norm_time;
};

using GroupedResults = std::vector<std::pair<std::string, std::vector<EpisodeResult>>>;

/// One row per path plus a final "Overall" row. SR, SPL and HFR count every
/// trial; BR and the step/time columns only count trials that did not end in a
/// hard failure. The overall row pools trials across paths.
std::vector<PathReport> aggregate(const GroupedResults& grouped, const std::map<std::string, HumanBaseline>& baselines);

std::string render_report_text(std::span<const PathReport> reports);
std::string render_report_csv(std::span<const PathReport> reports);
std::vector<PathReport> parse_report_csv(const std::string& text);

/// Writes report.csv and report.txt into `dir`.
void write_report(std::span<const PathReport> reports, const std::filesystem::path& dir);

struct ReplayReport {
  std::string episode_id;
  std::uint64_t trial = 0;
  std::size_t steps = 0;
  std::size_t mismatches = 0;
  bool result_matches = false;
};

/// Re-simulates a logged episode from its header and action sequence and
/// compares every step against the log bit-for-bit.
ReplayReport replay_log(std::istream& log);

/// 6 m x 6 m room with four boxes of assorted heights; one episode "scan" at
/// the centre.
Scenario synthetic_box_room();

struct MapEvalResult {
  FidelityReport fidelity;
  GlobalMap map;
  double seconds = 0.0;
};

/// Noise-free in-place scan (`turns` left turns) from the episode start,
/// scored against the analytic rasterization.
MapEvalResult map_eval(const Scenario& scenario, const std::string& episode_id, const ResolvedConfig& config,
                       int turns);

nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

}  // namespace loconav
