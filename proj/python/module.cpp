#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "loconav/config.hpp"
#include "loconav/errors.hpp"
#include "loconav/eval.hpp"
#include "loconav/nav.hpp"
#include "loconav/pose.hpp"
#include "loconav/scenario.hpp"
#include "loconav/sensors.hpp"
#include "loconav/service.hpp"

namespace py = pybind11;
using namespace loconav;

// Structured values cross the boundary as JSON text; the Python package
// decodes them.

namespace {

using Overrides = std::map<std::string, std::string>;
using PoseTuple = std::tuple<double, double, double>;

Pose to_pose(const PoseTuple& t) { return {std::get<0>(t), std::get<1>(t), std::get<2>(t)}; }
PoseTuple from_pose(const Pose& p) { return {p.x, p.y, p.theta}; }

Scenario parse_scenario(const std::string& text) { return scenario_from_json(nlohmann::json::parse(text)); }

ResolvedConfig parse_config(const std::string& text) { return config_from_json(nlohmann::json::parse(text)); }

std::string resolve_config(const std::string& profile, const std::string& scenario_json, const Overrides& overrides,
                           std::optional<bool> noise) {
  const std::vector<std::pair<std::string, std::string>> given(overrides.begin(), overrides.end());
  if (scenario_json.empty()) return config_to_json(load_config(profile, nullptr, given, noise)).dump();
  const Scenario s = parse_scenario(scenario_json);
  return config_to_json(load_config(profile, &s, given, noise)).dump();
}

nlohmann::json result_json(const EpisodeResult& r) {
  nlohmann::json traj = nlohmann::json::array();
  for (const TrajectoryEntry& e : r.trajectory)
    traj.push_back({{"pose", pose_to_json(e.pose)}, {"action", to_string(e.action)}, {"bump", e.bump}});
  return {{"episode", r.episode_id},       {"trial", r.trial},
          {"success", r.success},          {"hard_failure", r.hard_failure},
          {"steps", r.steps},              {"wall_time_s", r.wall_time_s},
          {"bumped", r.bumped},            {"final_distance", r.final_distance},
          {"path_length_m", r.path_length_m}, {"termination", r.termination},
          {"trajectory", traj}};
}

std::string run_one(const std::string& scenario_json, const std::string& episode, std::uint64_t seed,
                    std::uint64_t trial, const std::string& config_json) {
  const Scenario s = parse_scenario(scenario_json);
  const ResolvedConfig cfg = parse_config(config_json);
  EpisodeResult r;
  {
    py::gil_scoped_release release;
    r = run_episode(s, s.episode(episode), seed, trial, cfg);
  }
  return result_json(r).dump();
}

nlohmann::json opt_ms(const std::optional<MeanSem>& m) {
  if (!m) return nullptr;
  return {{"mean", m->mean}, {"sem", m->sem}, {"n", m->n}};
}

/// Runs `trials` episodes per path and returns (rows JSON, report text, report CSV).
std::tuple<std::string, std::string, std::string> evaluate(const std::string& scenario_json,
                                                           const std::string& config_json,
                                                           std::vector<std::string> paths, int trials,
                                                           std::uint64_t seed) {
  if (trials < 1) throw ContractError("trials must be >= 1");
  const Scenario s = parse_scenario(scenario_json);
  const ResolvedConfig cfg = parse_config(config_json);
  if (paths.empty())
    for (const EpisodeSpec& e : s.episodes) paths.push_back(e.id);
  GroupedResults grouped;
  {
    py::gil_scoped_release release;
    for (const std::string& id : paths) {
      grouped.emplace_back(id, std::vector<EpisodeResult>{});
      for (int t = 0; t < trials; ++t)
        grouped.back().second.push_back(run_episode(s, s.episode(id), seed, static_cast<std::uint64_t>(t), cfg));
    }
  }
  const auto reports = aggregate(grouped, collect_baselines(s, nullptr));
  nlohmann::json rows = nlohmann::json::array();
  for (const PathReport& r : reports) {
    rows.push_back({{"path", r.path},
                    {"trials", r.trials},
                    {"sr", r.sr},
                    {"spl", r.spl ? nlohmann::json(*r.spl) : nlohmann::json(nullptr)},
                    {"hfr", r.hfr},
                    {"br", r.br ? nlohmann::json(*r.br) : nlohmann::json(nullptr)},
                    {"abs_steps", opt_ms(r.abs_steps)},
                    {"norm_steps", opt_ms(r.norm_steps)},
                    {"abs_time", opt_ms(r.abs_time)},
                    {"norm_time", opt_ms(r.norm_time)}});
  }
  return {rows.dump(), render_report_text(reports), render_report_csv(reports)};
}

/// Returns (fidelity JSON, occupancy array [2, side, side]).
std::tuple<std::string, py::array_t<float>> map_eval_py(const std::string& scenario_json, const std::string& episode,
                                                        const std::string& config_json, int turns) {
  const Scenario s = parse_scenario(scenario_json);
  const ResolvedConfig cfg = parse_config(config_json);
  const MapEvalResult r = map_eval(s, episode, cfg, turns);
  const FidelityReport& f = r.fidelity;
  const nlohmann::json j{{"observed_occupied", f.observed_occupied},
                         {"fraction_within_one", f.fraction_within_one()},
                         {"max_intrusion_cells", f.max_intrusion_cells},
                         {"passed", f.passed()},
                         {"seconds", r.seconds}};
  const auto side = static_cast<py::ssize_t>(r.map.grid.side());
  py::array_t<float> grid({py::ssize_t{2}, side, side});
  std::copy(r.map.grid.data().begin(), r.map.grid.data().end(), grid.mutable_data());
  return {j.dump(), grid};
}

/// A* over a boolean obstacle array indexed [y, x]. Returns (cells, length in cells).
std::tuple<std::vector<std::pair<int, int>>, double> plan_py(
    py::array_t<bool, py::array::c_style | py::array::forcecast> blocked, std::pair<int, int> start,
    std::pair<int, int> goal) {
  if (blocked.ndim() != 2) throw ContractError("blocked must be a 2-D array");
  const int h = static_cast<int>(blocked.shape(0));
  const int w = static_cast<int>(blocked.shape(1));
  TraversabilityGrid g(w, h);
  const auto view = blocked.unchecked<2>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) g.set_blocked({x, y}, view(y, x));
  const Cell s{start.first, start.second};
  const Cell t{goal.first, goal.second};
  if (!g.contains(s) || !g.contains(t)) throw ContractError("start and goal must lie inside the grid");
  const Path p = plan(g, s, t);
  std::vector<std::pair<int, int>> cells;
  cells.reserve(p.cells.size());
  for (const Cell& c : p.cells) cells.emplace_back(c.x, c.y);
  return {cells, p.cost.value()};
}

/// NaN marks invalid pixels on the way in and out.
py::array_t<float> restore_depth_py(py::array_t<float, py::array::c_style | py::array::forcecast> depth,
                                    double depth_min, double depth_max) {
  if (depth.ndim() != 2) throw ContractError("depth must be a 2-D array");
  const int h = static_cast<int>(depth.shape(0));
  const int w = static_cast<int>(depth.shape(1));
  DepthImage img(w, h, depth_min, depth_max);
  const auto in = depth.unchecked<2>();
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (std::isnan(in(v, u))) img.invalidate(u, v);
      else img.set(u, v, in(v, u));
    }
  const DepthImage out_img = restore_depth(img);
  py::array_t<float> out({h, w});
  auto o = out.mutable_unchecked<2>();
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      o(v, u) = out_img.is_valid(u, v) ? out_img.at(u, v) : std::numeric_limits<float>::quiet_NaN();
  return out;
}

py::bytes encode_frame_py(const std::string& envelope_json, const std::vector<std::string>& sections) {
  WireMessage m;
  m.envelope = nlohmann::json::parse(envelope_json);
  for (const auto& s : sections) m.sections.emplace_back(s.begin(), s.end());
  const auto bytes = encode_frame(m);
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

/// Decodes one complete frame (length prefix included).
std::tuple<std::string, std::vector<py::bytes>> decode_frame_py(const std::string& frame) {
  FrameReader r;
  r.feed(reinterpret_cast<const std::uint8_t*>(frame.data()), frame.size());
  const auto m = r.next();
  if (!m) throw ContractError("incomplete frame");
  if (r.buffered() != 0) throw ContractError("bytes left over after the frame");
  std::vector<py::bytes> sections;
  for (const auto& s : m->sections) sections.emplace_back(reinterpret_cast<const char*>(s.data()), s.size());
  return {m->envelope.dump(), sections};
}

}  // namespace

PYBIND11_MODULE(_loconav, m) {
  m.doc() = "Native core of the loconav package";

  static py::exception<NoPathError> no_path(m, "NoPathError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<PreconditionError> precondition(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const NoPathError& e) {
      no_path(e.what());
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const PreconditionError& e) {
      precondition(e.what());
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("scenario_json", [](const std::string& path) { return scenario_to_json(load_scenario(path)).dump(); },
        py::arg("path"));
  m.def("resolve_config", &resolve_config, py::arg("profile"), py::arg("scenario_json"), py::arg("overrides"),
        py::arg("noise"));
  m.def("run_episode", &run_one, py::arg("scenario_json"), py::arg("episode"), py::arg("seed"), py::arg("trial"),
        py::arg("config_json"));
  m.def("evaluate", &evaluate, py::arg("scenario_json"), py::arg("config_json"), py::arg("paths"),
        py::arg("trials"), py::arg("seed"));
  m.def("map_eval", &map_eval_py, py::arg("scenario_json"), py::arg("episode"), py::arg("config_json"),
        py::arg("turns"));
  m.def("synthetic_box_room", [] { return scenario_to_json(synthetic_box_room()).dump(); });
  m.def(
      "to_episode",
      [](const PoseTuple& chi0, const PoseTuple& chi) { return from_pose(to_episode(make_frame(to_pose(chi0)), to_pose(chi))); },
      py::arg("chi0"), py::arg("chi"));
  m.def(
      "from_episode",
      [](const PoseTuple& chi0, const PoseTuple& p) { return from_pose(from_episode(make_frame(to_pose(chi0)), to_pose(p))); },
      py::arg("chi0"), py::arg("pose"));
  m.def("plan", &plan_py, py::arg("blocked"), py::arg("start"), py::arg("goal"));
  m.def("restore_depth", &restore_depth_py, py::arg("depth"), py::arg("depth_min") = 0.0,
        py::arg("depth_max") = 5.0);
  m.def("encode_frame", &encode_frame_py, py::arg("envelope_json"), py::arg("sections"));
  m.def("decode_frame", &decode_frame_py, py::arg("frame"));
  m.def("websocket_accept_key", &websocket_accept_key, py::arg("client_key"));
}
