#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "loconav/config.hpp"
#include "loconav/errors.hpp"
#include "loconav/eval.hpp"
#include "loconav/scenario.hpp"
#include "loconav/service.hpp"

namespace fs = std::filesystem;
using namespace loconav;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct CommonOptions {
  std::string scenario;
  std::string profile;
  std::string noise;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool scenario_required) {
  auto* s = cmd->add_option("--scenario", opts.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  if (scenario_required) s->required();
  cmd->add_option("--profile", opts.profile, "Built-in profile (loconav, simulation-default)");
  cmd->add_option("--noise", opts.noise, "Enable the calibrated noise models")->check(CLI::IsMember({"on", "off"}));
  for (const std::string& key : config_keys())
    cmd->add_option("--" + dashed(key), opts.overrides[key], "Override " + key);
}

std::vector<std::pair<std::string, std::string>> given_overrides(const CommonOptions& opts) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& key : config_keys()) {
    const auto it = opts.overrides.find(key);
    if (it != opts.overrides.end() && !it->second.empty()) out.emplace_back(key, it->second);
  }
  return out;
}

std::optional<bool> noise_flag(const CommonOptions& opts) {
  if (opts.noise.empty()) return std::nullopt;
  return opts.noise == "on";
}

int cmd_run(const CommonOptions& opts, const std::string& paths_arg, int trials, std::optional<std::uint64_t> seed_arg,
            const std::string& out_dir, int jobs) {
  const Scenario scenario = load_scenario(opts.scenario);
  const ResolvedConfig config = load_config(opts.profile, &scenario, given_overrides(opts), noise_flag(opts));
  const std::uint64_t seed = seed_arg.value_or(scenario.seed);

  std::vector<std::string> paths = split_csv(paths_arg);
  if (paths.empty())
    for (const EpisodeSpec& e : scenario.episodes) paths.push_back(e.id);
  for (const auto& p : paths) scenario.episode(p);
  if (trials < 1) throw ContractError("--trials must be >= 1");

  const fs::path out(out_dir);
  fs::create_directories(out / "logs");

  struct Job {
    std::size_t path;
    int trial;
  };
  std::vector<Job> work;
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (int t = 0; t < trials; ++t) work.push_back({p, t});
  std::vector<EpisodeResult> results(work.size());
  std::vector<std::string> errors(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      const std::string& id = paths[work[i].path];
      const fs::path log_path = out / "logs" / fmt::format("{}_{}.jsonl", id, work[i].trial);
      try {
        std::ofstream log(log_path, std::ios::binary);
        if (!log) throw std::runtime_error(fmt::format("cannot write '{}'", log_path.string()));
        EpisodeLogWriter writer(log);
        results[i] = run_episode(scenario, scenario.episode(id), seed, static_cast<std::uint64_t>(work[i].trial),
                                 config, &writer);
      } catch (const std::exception& e) {
        errors[i] = fmt::format("{} trial {}: {}", id, work[i].trial, e.what());
      }
    }
  };
  const int n_threads = std::max(1, jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency()));
  std::vector<std::thread> threads;
  for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  GroupedResults grouped;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    grouped.emplace_back(paths[p], std::vector<EpisodeResult>{});
    for (std::size_t i = 0; i < work.size(); ++i)
      if (work[i].path == p) grouped.back().second.push_back(results[i]);
  }
  const BaselineStore store(BaselineStore::path_for(opts.scenario));
  const auto reports = aggregate(grouped, collect_baselines(scenario, &store));
  write_report(reports, out);
  std::cout << render_report_text(reports);
  return 0;
}

int cmd_replay(const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error(fmt::format("cannot open log '{}'", log_path));
  const ReplayReport r = replay_log(in);
  fmt::print("episode {} trial {}: {} steps replayed, {} mismatches, result {}\n", r.episode_id, r.trial, r.steps,
             r.mismatches, r.result_matches ? "matches" : "differs");
  return r.mismatches == 0 && r.result_matches ? 0 : 1;
}

int cmd_map_eval(const CommonOptions& opts, int turns, const std::string& png) {
  Scenario scenario = opts.scenario.empty() ? synthetic_box_room() : load_scenario(opts.scenario);
  const ResolvedConfig config =
      load_config(opts.profile, opts.scenario.empty() ? nullptr : &scenario, given_overrides(opts), false);
  const MapEvalResult r = map_eval(scenario, scenario.episodes.at(0).id, config, turns);
  const FidelityReport& f = r.fidelity;
  const double frac = f.observed_occupied ? static_cast<double>(f.within_one_cell) / f.observed_occupied : 1.0;
  fmt::print("observed occupied cells: {}\nwithin one cell of analytic obstacles: {} ({:.4f})\n"
             "max intrusion into free space: {} cells\nfidelity: {}\nelapsed: {:.3f} s\n",
             f.observed_occupied, f.within_one_cell, frac, f.max_intrusion_cells, f.passed() ? "pass" : "fail",
             r.seconds);
  if (!png.empty()) write_map_png(png, r.map.grid);
  return f.passed() ? 0 : 1;
}

int cmd_serve(const CommonOptions& opts, int port, const std::string& host, const std::string& ui_dir,
              std::optional<std::uint64_t> seed_arg) {
  auto scenario = std::make_shared<const Scenario>(load_scenario(opts.scenario));
  const ResolvedConfig config = load_config(opts.profile, scenario.get(), given_overrides(opts), noise_flag(opts));
  BaselineStore store(BaselineStore::path_for(opts.scenario));
  SessionManager manager(scenario, config, seed_arg.value_or(scenario->seed), &store);
  ServerOptions so;
  so.port = port;
  so.bind_address = host;
  so.ui_dir = ui_dir;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  serve(manager, so, [] { return g_stop.load(); },
        [&](int bound) { fmt::print("listening on {}:{} (baselines: {})\n", host, bound, store.path().string()); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-goal navigation simulator, evaluator and teleop server"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string paths;
  int trials = 10;
  std::optional<std::uint64_t> run_seed;
  std::string out_dir = "out";
  int jobs = 0;
  auto* run = app.add_subcommand("run", "Run autonomous episodes and write a report");
  add_common(run, run_opts, true);
  run->add_option("--paths", paths, "Comma-separated episode ids (default: all)");
  run->add_option("--trials", trials, "Trials per path")->check(CLI::PositiveNumber);
  run->add_option("--seed", run_seed, "Root seed (default: scenario seed)");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--jobs", jobs, "Worker threads (default: hardware concurrency)");

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "Re-simulate an episode log and compare");
  replay->add_option("--log", log_path, "Episode log (.jsonl)")->required()->check(CLI::ExistingFile);

  CommonOptions serve_opts;
  int port = 8765;
  std::string host = "127.0.0.1";
  std::string ui_dir;
  std::optional<std::uint64_t> serve_seed;
  auto* srv = app.add_subcommand("serve", "Serve teleop and observe sessions");
  add_common(srv, serve_opts, true);
  srv->add_option("--port", port, "TCP port (0 picks a free one)");
  srv->add_option("--host", host, "Bind address");
  srv->add_option("--ui-dir", ui_dir, "Static console bundle");
  srv->add_option("--seed", serve_seed, "Root seed (default: scenario seed)");

  CommonOptions map_opts;
  int turns = 24;
  std::string png;
  auto* meval = app.add_subcommand("map-eval", "Noise-free scan scored against the analytic map");
  add_common(meval, map_opts, false);
  meval->add_option("--turns", turns, "Number of left turns in the scan");
  meval->add_option("--out", png, "Write the scanned map as PNG");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_opts, paths, trials, run_seed, out_dir, jobs);
    if (*replay) return cmd_replay(log_path);
    if (*srv) return cmd_serve(serve_opts, port, host, ui_dir, serve_seed);
    if (*meval) return cmd_map_eval(map_opts, turns, png);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
