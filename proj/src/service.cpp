#include "loconav/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>

#include <fmt/core.h>

#include "loconav/errors.hpp"
#include "loconav/rng.hpp"

namespace loconav {

std::vector<std::uint8_t> encode_frame(const WireMessage& msg) {
  nlohmann::json env = msg.envelope;
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& s : msg.sections) sizes.push_back(s.size());
  if (!msg.sections.empty()) env["sections"] = sizes;
  else env.erase("sections");
  const std::string head = env.dump() + "\n";

  std::size_t body = head.size();
  for (const auto& s : msg.sections) body += s.size();
  if (body > kMaxFrameBytes) throw ContractError(fmt::format("frame of {} bytes exceeds the limit", body));

  std::vector<std::uint8_t> out;
  out.reserve(4 + body);
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(body >> shift));
  out.insert(out.end(), head.begin(), head.end());
  for (const auto& s : msg.sections) out.insert(out.end(), s.begin(), s.end());
  return out;
}

WireMessage decode_frame_body(const std::uint8_t* data, std::size_t size) {
  const auto* nl = static_cast<const std::uint8_t*>(std::memchr(data, '\n', size));
  if (!nl) throw ContractError("frame envelope is not newline terminated");
  WireMessage msg;
  try {
    msg.envelope = nlohmann::json::parse(data, nl);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractError(fmt::format("frame envelope is not valid JSON: {}", e.what()));
  }
  if (!msg.envelope.is_object() || !msg.envelope.contains("type") || !msg.envelope["type"].is_string())
    throw ContractError("frame envelope needs a string 'type'");
  std::size_t pos = static_cast<std::size_t>(nl - data) + 1;
  if (msg.envelope.contains("sections")) {
    for (const auto& n : msg.envelope["sections"]) {
      if (!n.is_number_unsigned()) throw ContractError("section sizes must be unsigned integers");
      const auto len = n.get<std::size_t>();
      if (len > size - pos) throw ContractError("section sizes exceed the frame body");
      msg.sections.emplace_back(data + pos, data + pos + len);
      pos += len;
    }
  }
  if (pos != size) throw ContractError(fmt::format("{} trailing bytes after the last section", size - pos));
  return msg;
}

void FrameReader::feed(const std::uint8_t* data, std::size_t size) { buffer_.insert(buffer_.end(), data, data + size); }

std::optional<WireMessage> FrameReader::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::size_t body = 0;
  for (int i = 0; i < 4; ++i) body = (body << 8) | buffer_[i];
  if (body > kMaxFrameBytes) throw ContractError(fmt::format("frame of {} bytes exceeds the limit", body));
  if (buffer_.size() < 4 + body) return std::nullopt;
  WireMessage msg = decode_frame_body(buffer_.data() + 4, body);
  buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + static_cast<std::ptrdiff_t>(body));
  return msg;
}

WireMessage make_error(const std::string& code, const std::string& text) {
  return {{{"type", "error"}, {"code", code}, {"text", text}}, {}};
}

// ---------------------------------------------------------------------------

std::filesystem::path BaselineStore::path_for(const std::filesystem::path& scenario_path) {
  std::filesystem::path p = scenario_path;
  p.replace_filename(scenario_path.stem().string() + ".baselines.json");
  return p;
}

nlohmann::json BaselineStore::read_document() const {
  std::ifstream in(path_);
  if (!in) return {{"baselines", nlohmann::json::object()}, {"archive", nlohmann::json::array()}};
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path_.string(), e.what()));
  }
  if (!doc.contains("baselines")) doc["baselines"] = nlohmann::json::object();
  if (!doc.contains("archive")) doc["archive"] = nlohmann::json::array();
  return doc;
}

std::map<std::string, HumanBaseline> BaselineStore::load() const {
  std::lock_guard lock(mutex_);
  std::map<std::string, HumanBaseline> out;
  const nlohmann::json doc = read_document();
  for (const auto& [id, b] : doc.at("baselines").items()) out[id] = baseline_from_json(b);
  return out;
}

std::vector<std::pair<std::string, HumanBaseline>> BaselineStore::archive() const {
  std::lock_guard lock(mutex_);
  std::vector<std::pair<std::string, HumanBaseline>> out;
  const nlohmann::json doc = read_document();
  for (const auto& rec : doc.at("archive"))
    out.emplace_back(rec.at("path").get<std::string>(), baseline_from_json(rec.at("baseline")));
  return out;
}

void BaselineStore::save(const std::string& path_id, const HumanBaseline& baseline) {
  baseline.validate();
  std::lock_guard lock(mutex_);
  nlohmann::json doc = read_document();
  if (doc["baselines"].contains(path_id))
    doc["archive"].push_back({{"path", path_id}, {"baseline", doc["baselines"][path_id]}});
  doc["baselines"][path_id] = baseline_to_json(baseline);

  const auto tmp = std::filesystem::path(path_.string() + ".tmp");
  {
    std::ofstream out(tmp);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", tmp.string()));
  }
  std::filesystem::rename(tmp, path_);
}

std::map<std::string, HumanBaseline> collect_baselines(const Scenario& scenario, const BaselineStore* store) {
  std::map<std::string, HumanBaseline> out;
  for (const EpisodeSpec& e : scenario.episodes)
    if (e.baseline) out[e.id] = *e.baseline;
  if (store)
    for (const auto& [id, b] : store->load()) out[id] = b;
  return out;
}

Clock steady_clock_seconds() {
  return [] { return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count(); };
}

// ---------------------------------------------------------------------------

WireMessage depth_frame_message(const DepthImage& restored, int max_width, int max_height) {
  const DepthImage small = downsample(restored, max_width, max_height);
  WireMessage m;
  m.envelope = {{"type", "depth_frame"},
                {"width", small.width},
                {"height", small.height},
                {"depth_min", small.depth_min},
                {"depth_max", small.depth_max}};
  m.sections.push_back(encode_depth_payload(small));
  return m;
}

WireMessage map_tile_message(const GlobalMap& map, Cell center, int side, std::optional<Cell> goal) {
  const GlobalMap tile = viewport(map, center, side);
  WireMessage m;
  m.envelope = {{"type", "map_tile"},
                {"side", tile.grid.side()},
                {"resolution", tile.grid.resolution()},
                {"origin", {tile.grid.origin().x, tile.grid.origin().y}},
                {"agent_cell", {tile.agent_cell.x, tile.agent_cell.y}}};
  if (goal) {
    const Point2 g = map.grid.center_of(*goal);
    const Cell local = tile.grid.cell_of(g);
    m.envelope["goal_cell"] = {local.x, local.y};
  }
  m.sections.push_back(encode_map_payload(tile.grid, tile.visited));
  return m;
}

// ---------------------------------------------------------------------------

SessionManager::SessionManager(std::shared_ptr<const Scenario> scenario, ResolvedConfig config, std::uint64_t seed,
                               BaselineStore* store, Clock clock, ServiceLimits limits)
    : scenario_(std::move(scenario)),
      config_(canonical_config(config)),
      seed_(seed),
      store_(store),
      clock_(std::move(clock)),
      limits_(limits) {
  if (!scenario_) throw ContractError("session manager needs a scenario");
  scenario_->validate(config_.agent);
}

std::size_t SessionManager::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionManager::close(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  sessions_.erase(session_id);
}

std::vector<WireMessage> SessionManager::handle(const WireMessage& msg) {
  const std::string type = msg.type();
  if (type == "hello") return hello(msg);

  const std::string id = msg.envelope.value("session", std::string{});
  const auto session = find(id);
  if (!session) return {make_error("no_session", fmt::format("unknown session '{}'", id))};
  std::lock_guard lock(session->mutex);
  try {
    if (type == "reset") return reset(*session, msg);
    if (type == "action") return action(*session, msg);
    if (type == "tick") return tick(*session);
    if (type == "save_baseline") return save_baseline(*session);
  } catch (const std::exception& e) {
    return {make_error("bad_request", e.what())};
  }
  return {make_error("unknown_type", fmt::format("unknown message type '{}'", type))};
}

std::vector<WireMessage> SessionManager::hello(const WireMessage& msg) {
  const std::string mode = msg.envelope.value("mode", std::string{"teleop"});
  if (mode != "teleop" && mode != "observe")
    return {make_error("bad_request", fmt::format("unknown mode '{}' (teleop or observe)", mode))};
  auto s = std::make_shared<Session>();
  s->mode = mode == "observe" ? SessionMode::Observe : SessionMode::Teleop;
  {
    std::lock_guard lock(mutex_);
    if (sessions_.size() >= limits_.max_sessions)
      return {make_error("too_many_sessions", fmt::format("at most {} sessions", limits_.max_sessions))};
    std::uint64_t salt = splitmix64(next_id_++ ^ static_cast<std::uint64_t>(clock_() * 1e6));
    s->id = fmt::format("{:016x}", salt);
    sessions_[s->id] = s;
  }
  nlohmann::json episodes = nlohmann::json::array();
  for (const EpisodeSpec& e : scenario_->episodes) {
    nlohmann::json j{{"id", e.id}, {"goal_rel", {e.goal_rel.x, e.goal_rel.y}}};
    if (e.baseline) j["baseline"] = baseline_to_json(*e.baseline);
    episodes.push_back(std::move(j));
  }
  return {{{{"type", "welcome"},
            {"session", s->id},
            {"mode", mode},
            {"episodes", episodes},
            {"goal_threshold", config_.planner.goal_threshold},
            {"max_actions_per_second", limits_.actions_per_second}},
           {}}};
}

std::vector<WireMessage> SessionManager::reset(Session& s, const WireMessage& msg) {
  const std::string episode = msg.envelope.at("episode").get<std::string>();
  const EpisodeSpec& spec = scenario_->episode(episode);
  s.trial = msg.envelope.value("trial", std::uint64_t{0});
  s.runtime.reset();
  s.runtime.emplace(*scenario_, spec, config_, derive_seed(seed_, spec.id, s.trial));
  s.navigator.reset();
  if (s.mode == SessionMode::Observe) s.navigator.emplace(s.runtime->goal(), config_.planner, config_.agent);
  s.trajectory.clear();
  s.done = false;
  s.success = false;
  s.last_bump = false;
  s.started_at = clock_();
  s.finished_at = s.started_at;
  s.tokens = limits_.actions_per_second;
  s.refilled_at = s.started_at;
  std::vector<WireMessage> out{state(s)};
  for (auto& m : observation(s)) out.push_back(std::move(m));
  return out;
}

bool SessionManager::take_token(Session& s) {
  const double now = clock_();
  s.tokens = std::min(limits_.actions_per_second, s.tokens + (now - s.refilled_at) * limits_.actions_per_second);
  s.refilled_at = now;
  if (s.tokens < 1.0) return false;
  s.tokens -= 1.0;
  return true;
}

std::vector<WireMessage> SessionManager::action(Session& s, const WireMessage& msg) {
  if (!s.runtime) return {make_error("episode_over", "no active episode; send reset first")};
  if (s.done) return {make_error("episode_over", "episode is finished; send reset to start again")};
  if (s.mode != SessionMode::Teleop) return {make_error("bad_request", "observe sessions advance with tick")};
  const Action a = action_from_string(msg.envelope.at("action").get<std::string>());
  if (!take_token(s)) return {make_error("rate_limited", "too many actions per second")};
  return advance(s, a);
}

std::vector<WireMessage> SessionManager::tick(Session& s) {
  if (!s.runtime) return {make_error("episode_over", "no active episode; send reset first")};
  if (s.done) return {make_error("episode_over", "episode is finished; send reset to start again")};
  if (s.mode != SessionMode::Observe) return {make_error("bad_request", "tick is only valid in observe sessions")};
  Navigator& nav = *s.navigator;
  if (detect_hard_failure(nav.state(), s.runtime->steps(), config_.planner)) {
    s.done = true;
    s.finished_at = clock_();
    return {state(s)};
  }
  const Action a = nav.decide(s.runtime->map(), s.runtime->belief());
  auto out = advance(s, a);
  nav.observe(a, s.last_bump);
  return out;
}

std::vector<WireMessage> SessionManager::advance(Session& s, Action a) {
  std::optional<Point2> local_goal;
  if (s.navigator) local_goal = s.navigator->local_goal_point();
  const StepRecord rec = s.runtime->apply(a, local_goal);
  s.trajectory.push_back(s.runtime->true_pose());
  s.last_bump = rec.outcome.bump;
  if (a == Action::Stop) {
    s.done = true;
    s.success = s.runtime->true_goal_distance() <= config_.planner.goal_threshold;
  } else if (s.runtime->steps() >= config_.planner.max_steps) {
    s.done = true;
  }
  if (s.done) s.finished_at = clock_();
  std::vector<WireMessage> out{state(s)};
  for (auto& m : observation(s)) out.push_back(std::move(m));
  return out;
}

std::vector<WireMessage> SessionManager::save_baseline(Session& s) {
  if (!s.runtime || !s.done || !s.success)
    return {make_error("baseline_requires_success", "only a finished, successful episode can be saved")};
  HumanBaseline b{s.runtime->path_length(), s.finished_at - s.started_at, s.runtime->steps()};
  if (store_) store_->save(s.runtime->spec().id, b);
  nlohmann::json env{{"type", "baseline"}, {"session", s.id}, {"path", s.runtime->spec().id}};
  env.update(baseline_to_json(b));
  env["stored"] = store_ != nullptr;
  return {{env, {}}};
}

WireMessage SessionManager::state(const Session& s) const {
  const EpisodeRuntime& rt = *s.runtime;
  const Pose& b = rt.belief();
  const Point2 g = rt.goal();
  const double dx = g.x - b.x;
  const double dy = g.y - b.y;
  const double c = std::cos(b.theta);
  const double sn = std::sin(b.theta);
  return {{{"type", "state"},
           {"session", s.id},
           {"episode", rt.spec().id},
           {"pose_belief", {b.x, b.y, b.theta}},
           {"goal_rel_remaining", {c * dx + sn * dy, -sn * dx + c * dy}},
           {"goal_distance", std::hypot(dx, dy)},
           {"step_count", rt.steps()},
           {"bump", s.last_bump},
           {"done", s.done},
           {"success", s.success}},
          {}};
}

std::vector<WireMessage> SessionManager::observation(const Session& s) const {
  const EpisodeRuntime& rt = *s.runtime;
  const GlobalMap& map = rt.map();
  const Cell goal = map.grid.cell_of(rt.goal());
  std::vector<WireMessage> out;
  out.push_back(depth_frame_message(rt.restored_depth(), limits_.depth_width, limits_.depth_height));
  out.push_back(map_tile_message(map, map.agent_cell, limits_.viewport_cells,
                                 map.grid.contains(goal) ? std::optional<Cell>(goal) : std::nullopt));
  for (auto& m : out) m.envelope["session"] = s.id;
  return out;
}

}  // namespace loconav
