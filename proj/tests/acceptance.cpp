// Acceptance runner. Each criterion prints one "[PASS] name: detail" or
// "[FAIL] name: detail" line; the exit status is non-zero if any selected
// criterion fails.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "loconav/config.hpp"
#include "loconav/episode.hpp"
#include "loconav/errors.hpp"
#include "loconav/eval.hpp"
#include "loconav/mapping.hpp"
#include "loconav/nav.hpp"
#include "loconav/pose.hpp"
#include "loconav/scenario.hpp"
#include "loconav/sensors.hpp"
#include "loconav/service.hpp"
#include "loconav/world.hpp"
#include "oracles.hpp"

using namespace loconav;

namespace {

// Pinned tolerances.
constexpr double kTransformTol = 1e-9;
constexpr double kTransformBudgetS = 1.0;
constexpr double kFidelityBudgetS = 10.0;
constexpr double kNoiseStdRelTol = 0.05;
constexpr double kCleanBudgetS = 60.0;
constexpr int kCleanStepCap = 300;
constexpr double kOptimalFactor = 4.0;
constexpr double kSplTol = 1e-9;
constexpr int kNoisyTrials = 10;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Scenario desk() { return load_scenario(std::string(LOCONAV_SOURCE_DIR) + "/scenarios/desk.json"); }

Pose random_pose(Rng& rng) {
  return {20.0 * uniform01(rng) - 10.0, 20.0 * uniform01(rng) - 10.0, normalize_angle(2 * kPi * uniform01(rng))};
}

Outcome transforms() {
  Rng rng(2024);
  std::vector<std::pair<Pose, Pose>> pairs(10000);
  for (auto& p : pairs) p = {random_pose(rng), random_pose(rng)};
  Stopwatch sw;
  double round_trip = 0.0, isometry = 0.0;
  bool origin_exact = true;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [chi0, chi] = pairs[i];
    const EpisodeFrame f = make_frame(chi0);
    origin_exact = origin_exact && to_episode(f, chi0) == Pose{0.0, 0.0, 0.0};
    const Pose e = to_episode(f, chi);
    const Pose back = from_episode(f, e);
    round_trip = std::max({round_trip, std::abs(back.x - chi.x), std::abs(back.y - chi.y)});
    const Pose& other = pairs[(i + 1) % pairs.size()].second;
    isometry = std::max(isometry, std::abs(distance(e, to_episode(f, other).position()) - distance(chi, other.position())));
  }
  const double t = sw.seconds();
  return {round_trip < kTransformTol && isometry < kTransformTol && origin_exact && t < kTransformBudgetS,
          fmt::format("round-trip {:.2e} m, isometry {:.2e} m, origin exact {}, {:.3f} s", round_trip, isometry,
                      origin_exact, t)};
}

std::int64_t brute_accuracy(const OccupancyGrid& m, const OccupancyGrid& gt) {
  std::int64_t n = 0;
  for (int ch = 0; ch < 2; ++ch)
    for (int y = 0; y < m.side(); ++y)
      for (int x = 0; x < m.side(); ++x) n += (m.get(ch, {x, y}) > 0.5f) == (gt.get(ch, {x, y}) > 0.5f);
  return n;
}

OccupancyGrid random_map(Rng& rng) {
  OccupancyGrid g(32, 0.05, {0, 0});
  for (float& v : g.data()) v = static_cast<float>(uniform01(rng));
  return g;
}

Outcome accuracy_instruments() {
  Rng rng(77);
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const OccupancyGrid m = random_map(rng);
    const OccupancyGrid gt = random_map(rng);
    mismatches += accuracy(m, gt) != brute_accuracy(m, gt);
  }

  // Telescoping over 10 recorded episodes: 5 desk paths x 2 trials with noise.
  const Scenario s = desk();
  const ResolvedConfig cfg = load_config("", &s, {}, true);
  int telescoping_failures = 0;
  int episodes = 0;
  for (const EpisodeSpec& spec : s.episodes) {
    for (std::uint64_t trial = 0; trial < 2; ++trial, ++episodes) {
      EpisodeRuntime rt(s, spec, cfg, derive_seed(s.seed, spec.id, trial));
      Navigator nav(spec.goal_rel, cfg.planner, cfg.agent);
      const std::int64_t a0 = accuracy(rt.map(), rt.ground_truth());
      std::int64_t sum = 0;
      while (rt.steps() < cfg.planner.max_steps && !detect_hard_failure(nav.state(), rt.steps(), cfg.planner)) {
        const Action a = nav.decide(rt.map(), rt.belief());
        const StepRecord r = rt.apply(a, nav.local_goal_point());
        nav.observe(a, r.outcome.bump);
        sum += r.reward_global;
        if (a == Action::Stop) break;
      }
      telescoping_failures += sum != accuracy(rt.map(), rt.ground_truth()) - a0;
    }
  }
  return {mismatches == 0 && telescoping_failures == 0,
          fmt::format("{} / 100 brute-force mismatches, {} / {} episodes fail telescoping", mismatches,
                      telescoping_failures, episodes)};
}

Outcome astar() {
  Rng rng(5050);
  int mismatches = 0, invalid = 0, solvable = 0;
  for (int i = 0; i < 200; ++i) {
    TraversabilityGrid g = loconav::testing::random_obstacle_grid(50, 0.3, rng);
    const Cell s{0, 0}, t{49, 49};
    g.set_blocked(s, false);
    g.set_blocked(t, false);
    const auto oracle = loconav::testing::dijkstra_cost(g, s, t);
    try {
      const Path p = plan(g, s, t);
      mismatches += !oracle || !(p.cost == *oracle);
      invalid += !loconav::testing::valid_path(g, p.cells, s, t, p.cost);
      ++solvable;
    } catch (const NoPathError&) {
      mismatches += oracle.has_value();
    }
  }
  return {mismatches == 0 && invalid == 0,
          fmt::format("{} cost mismatches, {} invalid paths ({} solvable grids of 200)", mismatches, invalid, solvable)};
}

Outcome fidelity() {
  const Scenario s = synthetic_box_room();
  const ResolvedConfig cfg = load_config("", &s, {}, false);
  const int turns = static_cast<int>(std::lround(2 * kPi / cfg.agent.turn_step));
  const MapEvalResult r = map_eval(s, s.episodes.front().id, cfg, turns);
  const FidelityReport& f = r.fidelity;
  return {f.passed() && r.seconds < kFidelityBudgetS,
          fmt::format("{:.1f}% of {} observed-occupied cells within 1 cell, max intrusion {} cells, {:.2f} s",
                      100.0 * f.fraction_within_one(), f.observed_occupied, f.max_intrusion_cells, r.seconds)};
}

Outcome sticky() {
  Scenario s;
  s.bounds = {-2.0, -2.0, 2.0, 2.0};
  const NoiseConfig noise = NoiseConfig::calibrated();
  const AgentConfig agent;
  Rng rng(1000);
  int bumps = 0, moved = 0;
  for (int i = 0; i < 1000; ++i) {
    // Just off the east wall, roughly facing it.
    const double gap = 0.1 * uniform01(rng);
    const Pose start{2.0 - agent.base_radius - gap - 1e-6, 3.0 * uniform01(rng) - 1.5,
                     deg_to_rad(60.0 * uniform01(rng) - 30.0)};
    const StepOutcome o = step(start, Action::Forward, agent, noise, s, rng);
    bumps += o.bump;
    moved += !(o.pose.x == start.x && o.pose.y == start.y && o.displacement.dx == 0.0 && o.displacement.dy == 0.0);
  }
  return {bumps == 1000 && moved == 0, fmt::format("{} / 1000 bumps, {} with non-zero translation", bumps, moved)};
}

Outcome restoration() {
  // Constant scene with holes, including a large one.
  DepthImage img(160, 120, 0.0, 5.0);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) img.set(u, v, 2.5f);
  for (int v = 30; v < 80; ++v)
    for (int u = 40; u < 110; ++u) img.invalidate(u, v);
  for (int k = 0; k < 50; ++k) img.invalidate(7 + 3 * k % 150, 5 + 2 * k % 110);
  const DepthImage restored = restore_depth(img);
  bool fill_exact = restored.valid_count() == static_cast<std::size_t>(img.width) * img.height;
  for (float z : restored.values) fill_exact = fill_exact && z == 2.5f;

  // Zero-noise identity on a rendered frame.
  const Scenario desk_s = desk();
  const ResolvedConfig cfg = load_config("", &desk_s, {}, false);
  const DepthImage clean = render_depth(desk_s.episodes.front().start, cfg.camera, desk_s);
  Rng rng(3);
  const bool identity = apply_depth_noise(clean, DepthNoiseConfig{}, rng) == clean;

  // Monte Carlo spread over 10^5 pixels at one depth.
  DepthImage flat(400, 250, 0.0, 10.0);
  for (int v = 0; v < flat.height; ++v)
    for (int u = 0; u < flat.width; ++u) flat.set(u, v, 3.0f);
  DepthNoiseConfig n;
  n.sigma0 = 0.01;
  n.sigma2 = 0.002;
  const double sigma = n.sigma0 + n.sigma2 * 9.0;
  const DepthImage noisy = apply_depth_noise(flat, n, rng);
  double sum = 0.0, sq = 0.0;
  for (float z : noisy.values) {
    const double d = static_cast<double>(z) - 3.0;
    sum += d;
    sq += d * d;
  }
  const double count = static_cast<double>(noisy.values.size());
  const double sd = std::sqrt((sq - sum * sum / count) / (count - 1));
  const double rel = std::abs(sd / sigma - 1.0);
  return {fill_exact && identity && rel <= kNoiseStdRelTol,
          fmt::format("hole fill exact {}, zero-noise identity {}, std {:.5f} vs {:.5f} ({:+.2f}%)", fill_exact,
                      identity, sd, sigma, 100.0 * (sd / sigma - 1.0))};
}

/// Fewest forward steps along the shortest collision-free route on the
/// analytic map inflated by the robot radius.
std::optional<int> optimal_forward_steps(const Scenario& s, const EpisodeSpec& spec, const ResolvedConfig& cfg) {
  const EpisodeRuntime rt(s, spec, cfg, 0);
  PlannerConfig pc = cfg.planner;
  pc.inflation_radius = cfg.agent.base_radius;
  TraversabilityGrid g = inflate(rt.ground_truth(), pc);
  const Cell start = rt.map().agent_cell;
  const Cell goal = rt.map().grid.cell_of(spec.goal_rel);
  g.set_blocked(start, false);
  g.set_blocked(goal, false);
  const auto cost = loconav::testing::dijkstra_cost(g, start, goal);
  if (!cost) return std::nullopt;
  const double length = cost->value() * rt.map().grid.resolution();
  return static_cast<int>(std::ceil(length / cfg.agent.forward_step - 1e-9));
}

Outcome e2e_clean() {
  const Scenario s = desk();
  const ResolvedConfig cfg = load_config("", &s, {}, false);
  Stopwatch sw;
  bool ok = true;
  std::string detail;
  for (const EpisodeSpec& spec : s.episodes) {
    const EpisodeResult r = run_episode(s, spec, s.seed, 0, cfg);
    const auto opt = optimal_forward_steps(s, spec, cfg);
    if (!opt) {
      detail += fmt::format("{}: unreachable; ", spec.id);
      continue;
    }
    const bool path_ok = r.success && r.steps <= kCleanStepCap && r.steps <= kOptimalFactor * *opt;
    ok = ok && path_ok;
    detail += fmt::format("{} {} {}/{} steps; ", spec.id, r.success ? "ok" : "FAILED", r.steps, *opt);
  }
  const double t = sw.seconds();
  ok = ok && t < kCleanBudgetS;
  return {ok, detail + fmt::format("{:.1f} s", t)};
}

std::string noisy_report(const Scenario& s, const ResolvedConfig& cfg, std::vector<PathReport>& reports,
                         int& invariant_failures) {
  GroupedResults grouped;
  for (const EpisodeSpec& spec : s.episodes) {
    grouped.emplace_back(spec.id, std::vector<EpisodeResult>{});
    for (int t = 0; t < kNoisyTrials; ++t) {
      EpisodeResult r = run_episode(s, spec, s.seed, static_cast<std::uint64_t>(t), cfg);
      invariant_failures += r.success && r.hard_failure;
      grouped.back().second.push_back(std::move(r));
    }
  }
  reports = aggregate(grouped, collect_baselines(s, nullptr));
  return render_report_csv(reports) + render_report_text(reports);
}

Outcome e2e_noisy() {
  const Scenario s = desk();
  const ResolvedConfig cfg = load_config("", &s, {}, true);
  std::vector<PathReport> reports;
  int invariant_failures = 0;
  const std::string first = noisy_report(s, cfg, reports, invariant_failures);

  const bool shape = reports.size() == s.episodes.size() + 1 && reports.back().path == "Overall";
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (const PathReport& r : reports) {
    const bool row_ok = r.spl && *r.spl <= r.sr + 1e-12 && in01(r.sr) && in01(*r.spl) && in01(r.hfr) &&
                        (!r.br || in01(*r.br)) && r.sr + r.hfr <= 1.0 + 1e-12;
    invariant_failures += !row_ok;
  }
  // Every report column is present in the rendered text.
  std::size_t header_misses = 0;
  for (const char* col : {"SR", "SPL", "HFR", "BR", "Abs. Steps", "Norm. Steps", "Abs. Time", "Norm. Time"})
    header_misses += first.find(col) == std::string::npos;

  std::vector<PathReport> again;
  int ignored = 0;
  const bool identical = noisy_report(s, cfg, again, ignored) == first;

  std::cout << render_report_text(reports);
  const PathReport& overall = reports.back();
  return {shape && header_misses == 0 && invariant_failures == 0 && identical,
          fmt::format("{} rows, {} invariant violations, byte-identical rerun {}; overall SR {:.3f} SPL {:.3f}",
                      reports.size(), invariant_failures, identical, overall.sr, overall.spl.value_or(-1.0))};
}

Outcome spl_fixture() {
  EpisodeResult r;
  r.episode_id = "A";
  r.success = true;
  r.steps = 32;
  r.wall_time_s = 32 * 5.4;
  r.termination = "stop";
  const HumanBaseline b{3.8, 124.0, 23};
  const auto reports = aggregate({{"A", {r}}}, {{"A", b}});
  const double spl_v = reports.front().spl.value_or(-1.0);
  const double norm = reports.front().norm_steps ? reports.front().norm_steps->mean : -1.0;
  const double expected = 23.0 / 32.0;
  return {std::abs(spl_v - expected) < kSplTol && std::abs(norm - expected) < kSplTol &&
              std::abs(spl_v - 0.719) < 5e-4,
          fmt::format("SPL {:.6f}, norm steps {:.6f} (23/32 = {:.6f})", spl_v, norm, expected)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"transforms", transforms}, {"accuracy", accuracy_instruments},
      {"astar", astar},           {"fidelity", fidelity},
      {"sticky", sticky},         {"restoration", restoration},
      {"e2e_clean", e2e_clean},   {"e2e_noisy", e2e_noisy},
      {"spl_fixture", spl_fixture}};

  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  for (const auto& name : only) {
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; })) {
      std::cerr << "unknown criterion '" << name << "'\n";
      return 2;
    }
  }

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
