#include "loconav/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "loconav/errors.hpp"
#include "loconav/nav.hpp"

namespace loconav {

nlohmann::json pose_to_json(const Pose& p) { return nlohmann::json::array({p.x, p.y, p.theta}); }

Pose pose_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

namespace {

nlohmann::json point_or_null(std::optional<Point2> p) {
  if (!p) return nullptr;
  return nlohmann::json::array({p->x, p->y});
}

}  // namespace

void EpisodeLogWriter::header(const Scenario& scenario, const EpisodeSpec& spec, std::uint64_t seed,
                              std::uint64_t trial, const ResolvedConfig& config) {
  const nlohmann::json rec{{"type", "header"},       {"episode", spec.id},
                           {"trial", trial},         {"seed", seed},
                           {"config", config_to_json(config)}, {"scenario", scenario_to_json(scenario)}};
  out_ << rec.dump() << '\n';
}

void EpisodeLogWriter::step(const StepRecord& rec, const Pose& pose_true, std::optional<Point2> local_goal,
                            std::size_t plan_length) {
  const nlohmann::json j{{"type", "step"},
                         {"step", rec.step},
                         {"pose_true", pose_to_json(pose_true)},
                         {"pose_belief", pose_to_json(rec.belief)},
                         {"action", to_string(rec.action)},
                         {"bump", rec.outcome.bump},
                         {"reward_local", rec.reward_local},
                         {"reward_global", rec.reward_global},
                         {"local_goal", point_or_null(local_goal)},
                         {"plan_length", plan_length}};
  out_ << j.dump() << '\n';
}

void EpisodeLogWriter::result(const EpisodeResult& r) {
  const nlohmann::json j{{"type", "result"},           {"success", r.success},
                         {"hard_failure", r.hard_failure}, {"steps", r.steps},
                         {"wall_time_s", r.wall_time_s},   {"bumped", r.bumped},
                         {"final_distance", r.final_distance}, {"path_length_m", r.path_length_m},
                         {"termination", r.termination}};
  out_ << j.dump() << '\n';
}

EpisodeResult run_episode(const Scenario& scenario_in, const EpisodeSpec& spec_in, std::uint64_t seed,
                          std::uint64_t trial, const ResolvedConfig& config_in, EpisodeLogWriter* log) {
  // Logged runs must replay from their own header.
  const Scenario scenario = canonical_scenario(scenario_in);
  const ResolvedConfig config = canonical_config(config_in);
  const EpisodeSpec& spec = scenario.episode(spec_in.id);
  scenario.validate(config.agent);
  const double half_extent = 0.5 * (config.map.global_side - 1) * config.map.resolution;
  if (std::abs(spec.goal_rel.x) > half_extent || std::abs(spec.goal_rel.y) > half_extent)
    throw ContractError(fmt::format("episode '{}' goal lies outside the {} m global map", spec.id, 2 * half_extent));

  EpisodeRuntime rt(scenario, spec, config, derive_seed(seed, spec.id, trial));
  Navigator nav(rt.goal(), config.planner, config.agent);
  if (log) log->header(scenario, spec, seed, trial, config);

  EpisodeResult r;
  r.episode_id = spec.id;
  r.trial = trial;
  for (;;) {
    const NavState& st = nav.state();
    if (detect_hard_failure(st, rt.steps(), config.planner)) {
      r.hard_failure = true;
      r.termination = rt.steps() >= config.planner.max_steps                          ? "max_steps"
                      : st.replan_failures >= config.planner.max_replan_failures ? "replan_failures"
                                                                                  : "bumps";
      break;
    }
    const Action action = nav.decide(rt.map(), rt.belief());
    const std::optional<Point2> local_goal = nav.local_goal_point();
    const StepRecord rec = rt.apply(action, local_goal);
    nav.observe(action, rec.outcome.bump);
    r.trajectory.push_back({rt.true_pose(), action, rec.outcome.bump});
    if (log) log->step(rec, rt.true_pose(), local_goal, nav.state().last_plan.size());
    if (action == Action::Stop) {
      r.success = rt.true_goal_distance() <= config.planner.goal_threshold;
      r.termination = "stop";
      break;
    }
  }
  r.steps = rt.steps();
  r.wall_time_s = r.steps * config.eval.seconds_per_step;
  r.bumped = rt.bumped();
  r.final_distance = rt.true_goal_distance();
  r.path_length_m = rt.path_length();
  if (log) log->result(r);
  return r;
}

std::optional<double> spl(std::span<const EpisodeResult> results, const std::optional<HumanBaseline>& baseline) {
  if (!baseline || results.empty()) return std::nullopt;
  std::vector<double> terms;
  for (const EpisodeResult& r : results)
    terms.push_back(r.success ? std::min(1.0, static_cast<double>(baseline->steps) / r.steps) : 0.0);
  return mean_sem(terms)->mean;
}

std::optional<MeanSem> mean_sem(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  // Sorted summation keeps the result independent of trial order.
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  std::vector<double> dev;
  for (double x : v) dev.push_back((x - mean) * (x - mean));
  std::sort(dev.begin(), dev.end());
  ss = std::accumulate(dev.begin(), dev.end(), 0.0);
  const double sem = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return MeanSem{mean, sem, v.size()};
}

namespace {

struct Trial {
  const EpisodeResult* result;
  std::optional<HumanBaseline> baseline;
};

PathReport summarize(const std::string& name, const std::vector<Trial>& trials, bool with_abs) {
  PathReport rep;
  rep.path = name;
  rep.trials = trials.size();
  if (trials.empty()) return rep;

  std::vector<double> success, hard, spl_terms, bump, steps, times, norm_steps, norm_times;
  for (const Trial& t : trials) {
    const EpisodeResult& r = *t.result;
    success.push_back(r.success ? 1.0 : 0.0);
    hard.push_back(r.hard_failure ? 1.0 : 0.0);
    if (t.baseline)
      spl_terms.push_back(r.success ? std::min(1.0, static_cast<double>(t.baseline->steps) / r.steps) : 0.0);
    if (r.hard_failure) continue;
    bump.push_back(r.bumped ? 1.0 : 0.0);
    steps.push_back(r.steps);
    times.push_back(r.wall_time_s);
    if (t.baseline) {
      norm_steps.push_back(std::min(1.0, static_cast<double>(t.baseline->steps) / r.steps));
      norm_times.push_back(std::min(1.0, t.baseline->time_s / r.wall_time_s));
    }
  }
  rep.sr = mean_sem(success)->mean;
  rep.hfr = mean_sem(hard)->mean;
  if (auto m = mean_sem(spl_terms)) rep.spl = m->mean;
  if (auto m = mean_sem(bump)) rep.br = m->mean;
  if (with_abs) {
    rep.abs_steps = mean_sem(steps);
    rep.abs_time = mean_sem(times);
  }
  rep.norm_steps = mean_sem(norm_steps);
  rep.norm_time = mean_sem(norm_times);
  return rep;
}

}  // namespace

std::vector<PathReport> aggregate(const GroupedResults& grouped, const std::map<std::string, HumanBaseline>& baselines) {
  std::vector<PathReport> out;
  std::vector<Trial> pooled;
  for (const auto& [path, results] : grouped) {
    if (results.empty()) continue;
    std::optional<HumanBaseline> b;
    if (auto it = baselines.find(path); it != baselines.end()) b = it->second;
    std::vector<Trial> trials;
    for (const EpisodeResult& r : results) trials.push_back({&r, b});
    out.push_back(summarize(path, trials, true));
    pooled.insert(pooled.end(), trials.begin(), trials.end());
  }
  if (!pooled.empty()) out.push_back(summarize("Overall", pooled, false));
  return out;
}

namespace {

std::string fmt_opt(const std::optional<double>& v, int decimals) {
  return v ? fmt::format("{:.{}f}", *v, decimals) : "-";
}

std::string fmt_ms(const std::optional<MeanSem>& v, int decimals) {
  return v ? fmt::format("{:.{}f}±{:.{}f}", v->mean, decimals, v->sem, decimals) : "-";
}

std::string g17(double v) { return fmt::format("{:.17g}", v); }

std::string csv_opt(const std::optional<double>& v) { return v ? g17(*v) : ""; }

std::string csv_ms(const std::optional<MeanSem>& v) {
  return v ? fmt::format("{},{},{}", g17(v->mean), g17(v->sem), v->n) : ",,";
}

}  // namespace

std::string render_report_text(std::span<const PathReport> reports) {
  // "±" is two bytes in UTF-8; pad by display width.
  auto cell = [](const std::string& s, std::size_t width) {
    std::size_t shown = 0;
    for (unsigned char c : s) shown += (c & 0xC0) != 0x80;
    return s + std::string(width > shown ? width - shown : 0, ' ');
  };
  std::string out;
  out += cell("Path", 10) + cell("Trials", 8) + cell("SR", 7) + cell("SPL", 7) + cell("HFR", 7) + cell("BR", 7) +
         cell("Abs. Steps", 17) + cell("Norm. Steps", 15) + cell("Abs. Time", 19) + "Norm. Time\n";
  for (const PathReport& r : reports) {
    out += cell(r.path, 10) + cell(std::to_string(r.trials), 8) + cell(fmt::format("{:.3f}", r.sr), 7) +
           cell(fmt_opt(r.spl, 3), 7) + cell(fmt::format("{:.3f}", r.hfr), 7) + cell(fmt_opt(r.br, 3), 7) +
           cell(fmt_ms(r.abs_steps, 2), 17) + cell(fmt_ms(r.norm_steps, 3), 15) + cell(fmt_ms(r.abs_time, 2), 19) +
           fmt_ms(r.norm_time, 3) + "\n";
  }
  if (!reports.empty())
    out += "\nOverall pools every trial across paths. BR and the step/time columns exclude hard-failure trials.\n";
  return out;
}

std::string render_report_csv(std::span<const PathReport> reports) {
  std::string out =
      "path,trials,sr,spl,hfr,br,abs_steps_mean,abs_steps_sem,abs_steps_n,norm_steps_mean,norm_steps_sem,"
      "norm_steps_n,abs_time_mean,abs_time_sem,abs_time_n,norm_time_mean,norm_time_sem,norm_time_n\n";
  for (const PathReport& r : reports) {
    if (r.path.find(',') != std::string::npos) throw ContractError("path ids may not contain commas");
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.path, r.trials, g17(r.sr), csv_opt(r.spl), g17(r.hfr),
                       csv_opt(r.br), csv_ms(r.abs_steps), csv_ms(r.norm_steps), csv_ms(r.abs_time),
                       csv_ms(r.norm_time));
  }
  return out;
}

std::vector<PathReport> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::vector<PathReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 18) throw ContractError(fmt::format("report row has {} fields, expected 18", f.size()));
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s);
    };
    auto ms = [&](std::size_t i) -> std::optional<MeanSem> {
      if (f[i].empty()) return std::nullopt;
      return MeanSem{std::stod(f[i]), std::stod(f[i + 1]), std::stoul(f[i + 2])};
    };
    PathReport r;
    r.path = f[0];
    r.trials = std::stoul(f[1]);
    r.sr = std::stod(f[2]);
    r.spl = opt(f[3]);
    r.hfr = std::stod(f[4]);
    r.br = opt(f[5]);
    r.abs_steps = ms(6);
    r.norm_steps = ms(9);
    r.abs_time = ms(12);
    r.norm_time = ms(15);
    out.push_back(std::move(r));
  }
  return out;
}

void write_report(std::span<const PathReport> reports, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  const std::pair<std::string, std::string> files[] = {{"report.csv", render_report_csv(reports)},
                                                       {"report.txt", render_report_text(reports)}};
  for (const auto& [name, body] : files) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
  }
}

Scenario synthetic_box_room() {
  Scenario s;
  s.bounds = {0.0, 0.0, 6.0, 6.0};
  s.obstacles = {{1.0, 1.0, 1.6, 1.5, 0.5},
                 {4.2, 0.9, 5.0, 1.4, 1.0},
                 {4.4, 4.3, 4.9, 5.1, 0.75},
                 {0.9, 4.0, 1.8, 4.6, 2.0}};
  EpisodeSpec e;
  e.id = "scan";
  e.start = {3.0, 3.0, 0.0};
  e.goal_rel = {0.0, 0.0};
  s.episodes.push_back(e);
  return s;
}

MapEvalResult map_eval(const Scenario& scenario, const std::string& episode_id, const ResolvedConfig& config,
                       int turns) {
  const auto t0 = std::chrono::steady_clock::now();
  ResolvedConfig cfg = config;
  cfg.noise_enabled = false;
  EpisodeRuntime rt(scenario, scenario.episode(episode_id), cfg, scenario.seed);
  for (int i = 0; i < turns; ++i) rt.apply(Action::TurnLeft);
  MapEvalResult r;
  r.fidelity = map_fidelity(rt.map().grid, rt.ground_truth());
  r.map = rt.map();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

ReplayReport replay_log(std::istream& log) {
  std::string line;
  if (!std::getline(log, line)) throw ContractError("empty episode log");
  const nlohmann::json head = nlohmann::json::parse(line);
  if (head.at("type") != "header") throw ContractError("episode log must start with a header record");
  const Scenario scenario = scenario_from_json(head.at("scenario"));
  const ResolvedConfig config = config_from_json(head.at("config"));
  const EpisodeSpec& spec = scenario.episode(head.at("episode").get<std::string>());
  const std::uint64_t seed = head.at("seed").get<std::uint64_t>();
  const std::uint64_t trial = head.at("trial").get<std::uint64_t>();

  ReplayReport rep;
  rep.episode_id = spec.id;
  rep.trial = trial;
  EpisodeRuntime rt(scenario, spec, config, derive_seed(seed, spec.id, trial));
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    const nlohmann::json rec = nlohmann::json::parse(line);
    if (rec.at("type") == "step") {
      std::optional<Point2> lg;
      if (!rec.at("local_goal").is_null()) lg = Point2{rec["local_goal"][0].get<double>(), rec["local_goal"][1].get<double>()};
      const StepRecord got = rt.apply(action_from_string(rec.at("action").get<std::string>()), lg);
      ++rep.steps;
      const bool same = pose_from_json(rec.at("pose_true")) == rt.true_pose() &&
                        pose_from_json(rec.at("pose_belief")) == got.belief &&
                        rec.at("bump").get<bool>() == got.outcome.bump &&
                        rec.at("reward_local").get<double>() == got.reward_local &&
                        rec.at("reward_global").get<std::int64_t>() == got.reward_global;
      if (!same) ++rep.mismatches;
    } else if (rec.at("type") == "result") {
      const bool success = rt.true_goal_distance() <= config.planner.goal_threshold &&
                           !rec.at("hard_failure").get<bool>() && rec.at("termination") == "stop";
      rep.result_matches = rec.at("steps").get<int>() == rt.steps() && rec.at("success").get<bool>() == success &&
                           rec.at("bumped").get<bool>() == rt.bumped();
    }
  }
  return rep;
}

}  // namespace loconav
