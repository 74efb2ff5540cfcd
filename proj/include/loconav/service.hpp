#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loconav/config.hpp"
#include "loconav/episode.hpp"
#include "loconav/nav.hpp"
#include "loconav/scenario.hpp"

namespace loconav {

/// One protocol message: a JSON envelope with a "type" field plus optional
/// binary sections whose byte sizes are listed in envelope["sections"].
struct WireMessage {
  nlohmann::json envelope;
  std::vector<std::vector<std::uint8_t>> sections;

  std::string type() const { return envelope.value("type", std::string{}); }
};

constexpr std::size_t kMaxFrameBytes = 16u << 20;

/// Frame layout: u32 big-endian body length, then the envelope as one line of
/// JSON terminated by '\n', then the sections back to back.
std::vector<std::uint8_t> encode_frame(const WireMessage& msg);

/// Incremental decoder for a byte stream of frames.
class FrameReader {
 public:
  void feed(const std::uint8_t* data, std::size_t size);
  /// Next complete message, if any. Throws ContractError on a malformed frame.
  std::optional<WireMessage> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::vector<std::uint8_t> buffer_;
};

WireMessage decode_frame_body(const std::uint8_t* data, std::size_t size);

WireMessage make_error(const std::string& code, const std::string& text);

/// Baselines recorded from teleop runs, kept in a JSON file next to the
/// scenario. A repeated save replaces the current record and moves the old one
/// to the archive list.
class BaselineStore {
 public:
  explicit BaselineStore(std::filesystem::path path) : path_(std::move(path)) {}

  /// `desk.json` -> `desk.baselines.json` in the same directory.
  static std::filesystem::path path_for(const std::filesystem::path& scenario_path);

  const std::filesystem::path& path() const { return path_; }
  std::map<std::string, HumanBaseline> load() const;
  std::vector<std::pair<std::string, HumanBaseline>> archive() const;
  void save(const std::string& path_id, const HumanBaseline& baseline);

 private:
  nlohmann::json read_document() const;

  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

/// Scenario baselines overridden by any recorded in `store`.
std::map<std::string, HumanBaseline> collect_baselines(const Scenario& scenario, const BaselineStore* store);

enum class SessionMode { Teleop, Observe };

struct ServiceLimits {
  std::size_t max_sessions = 8;
  double actions_per_second = 20.0;
  int viewport_cells = 200;
  int depth_width = 64;
  int depth_height = 48;
};

/// Seconds on a monotonic clock; injectable for tests.
using Clock = std::function<double()>;
Clock steady_clock_seconds();

struct Session {
  std::string id;
  SessionMode mode = SessionMode::Teleop;
  std::optional<EpisodeRuntime> runtime;
  std::optional<Navigator> navigator;
  std::uint64_t trial = 0;
  std::vector<Pose> trajectory;
  bool done = false;
  bool success = false;
  bool last_bump = false;
  double started_at = 0.0;
  double finished_at = 0.0;
  double tokens = 0.0;
  double refilled_at = 0.0;
  std::mutex mutex;
};

/// Protocol state machine shared by every transport. Messages for one session
/// are handled one at a time; distinct sessions proceed concurrently.
class SessionManager {
 public:
  SessionManager(std::shared_ptr<const Scenario> scenario, ResolvedConfig config, std::uint64_t seed,
                 BaselineStore* store = nullptr, Clock clock = steady_clock_seconds(), ServiceLimits limits = {});

  /// Replies in the order they must be sent.
  std::vector<WireMessage> handle(const WireMessage& msg);
  void close(const std::string& session_id);
  std::size_t session_count() const;

  const ResolvedConfig& config() const { return config_; }

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<WireMessage> hello(const WireMessage& msg);
  std::vector<WireMessage> reset(Session& s, const WireMessage& msg);
  std::vector<WireMessage> action(Session& s, const WireMessage& msg);
  std::vector<WireMessage> tick(Session& s);
  std::vector<WireMessage> save_baseline(Session& s);
  std::vector<WireMessage> advance(Session& s, Action a);
  std::vector<WireMessage> observation(const Session& s) const;
  WireMessage state(const Session& s) const;
  bool take_token(Session& s);

  std::shared_ptr<const Scenario> scenario_;
  ResolvedConfig config_;
  std::uint64_t seed_;
  BaselineStore* store_;
  Clock clock_;
  ServiceLimits limits_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Depth frame: restored image downsampled to the stream size.
WireMessage depth_frame_message(const DepthImage& restored, int max_width, int max_height);
/// Map tile: global-map viewport centred on `center`.
WireMessage map_tile_message(const GlobalMap& map, Cell center, int side, std::optional<Cell> goal);

struct ServerOptions {
  int port = 8765;
  std::string bind_address = "127.0.0.1";
  std::filesystem::path ui_dir;
};

/// Blocking TCP server. Each connection is either a raw frame stream, a
/// WebSocket carrying one frame per binary message, or a plain HTTP GET for
/// static files under ui_dir. Returns when `stop` becomes true.
void serve(SessionManager& manager, const ServerOptions& options, const std::function<bool()>& stop,
           const std::function<void(int)>& on_listening = {});

std::string websocket_accept_key(const std::string& client_key);

}  // namespace loconav
