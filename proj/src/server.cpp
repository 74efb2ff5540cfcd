#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <fstream>
#include <list>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <openssl/evp.h>
#include <openssl/sha.h>

#include "loconav/errors.hpp"
#include "loconav/service.hpp"

namespace loconav {

std::string websocket_accept_key(const std::string& client_key) {
  const std::string src = client_key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(src.data()), src.size(), digest);
  unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<const char*>(out), static_cast<std::size_t>(n));
}

namespace {

class Connection {
 public:
  Connection(int fd, const std::function<bool()>& stop) : fd_(fd), stop_(stop) {}
  ~Connection() { ::close(fd_); }

  /// Reads whatever is available, waiting up to 200 ms. Returns false on EOF,
  /// error or shutdown.
  bool fill() {
    while (!stop_()) {
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, 200);
      if (r < 0) return errno == EINTR;
      if (r == 0) continue;
      std::uint8_t buf[65536];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) return false;
      in_.insert(in_.end(), buf, buf + n);
      return true;
    }
    return false;
  }

  bool need(std::size_t n) {
    while (in_.size() < n)
      if (!fill()) return false;
    return true;
  }

  std::vector<std::uint8_t> take(std::size_t n) {
    std::vector<std::uint8_t> out(in_.begin(), in_.begin() + static_cast<std::ptrdiff_t>(n));
    in_.erase(in_.begin(), in_.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }

  bool send_all(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    while (size > 0) {
      const ssize_t n = ::send(fd_, p, size, MSG_NOSIGNAL);
      if (n <= 0) return false;
      p += n;
      size -= static_cast<std::size_t>(n);
    }
    return true;
  }

  std::vector<std::uint8_t>& buffer() { return in_; }

 private:
  int fd_;
  const std::function<bool()>& stop_;
  std::vector<std::uint8_t> in_;
};

std::string content_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

std::string header_value(const std::string& request, const std::string& name) {
  std::istringstream in(request);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (key != name) continue;
    std::string v = line.substr(colon + 1);
    const auto b = v.find_first_not_of(" \t");
    const auto e = v.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
  }
  return {};
}

void http_reply(Connection& c, int status, const std::string& reason, const std::string& type, const std::string& body) {
  const std::string head = fmt::format("HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                                       status, reason, type, body.size());
  c.send_all(head.data(), head.size());
  c.send_all(body.data(), body.size());
}

void serve_static(Connection& c, const std::string& target, const std::filesystem::path& ui_dir) {
  if (ui_dir.empty()) return http_reply(c, 404, "Not Found", "text/plain", "no ui directory configured\n");
  std::string rel = target.substr(0, target.find('?'));
  if (rel.empty() || rel == "/") rel = "/index.html";
  if (rel.find("..") != std::string::npos) return http_reply(c, 403, "Forbidden", "text/plain", "forbidden\n");
  const std::filesystem::path file = ui_dir / rel.substr(1);
  std::ifstream in(file, std::ios::binary);
  if (!in) return http_reply(c, 404, "Not Found", "text/plain", "not found\n");
  std::ostringstream body;
  body << in.rdbuf();
  http_reply(c, 200, "OK", content_type(file), body.str());
}

class SessionTracker {
 public:
  explicit SessionTracker(SessionManager& m) : manager_(m) {}
  ~SessionTracker() {
    for (const auto& id : ids_) manager_.close(id);
  }

  std::vector<WireMessage> handle(const WireMessage& msg) {
    auto replies = manager_.handle(msg);
    for (const auto& r : replies)
      if (r.type() == "welcome") ids_.insert(r.envelope["session"].get<std::string>());
    return replies;
  }

 private:
  SessionManager& manager_;
  std::set<std::string> ids_;
};

void run_raw(Connection& c, SessionManager& manager) {
  SessionTracker tracker(manager);
  FrameReader reader;
  for (;;) {
    reader.feed(c.buffer().data(), c.buffer().size());
    c.buffer().clear();
    try {
      while (auto msg = reader.next())
        for (const auto& reply : tracker.handle(*msg)) {
          const auto bytes = encode_frame(reply);
          if (!c.send_all(bytes.data(), bytes.size())) return;
        }
    } catch (const ContractError& e) {
      const auto bytes = encode_frame(make_error("bad_frame", e.what()));
      c.send_all(bytes.data(), bytes.size());
      return;
    }
    if (!c.fill()) return;
  }
}

bool ws_send(Connection& c, std::uint8_t opcode, const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> head{static_cast<std::uint8_t>(0x80 | opcode)};
  const std::size_t n = payload.size();
  if (n < 126) {
    head.push_back(static_cast<std::uint8_t>(n));
  } else if (n <= 0xFFFF) {
    head.push_back(126);
    head.push_back(static_cast<std::uint8_t>(n >> 8));
    head.push_back(static_cast<std::uint8_t>(n));
  } else {
    head.push_back(127);
    for (int shift = 56; shift >= 0; shift -= 8) head.push_back(static_cast<std::uint8_t>(n >> shift));
  }
  return c.send_all(head.data(), head.size()) && c.send_all(payload.data(), payload.size());
}

void run_websocket(Connection& c, SessionManager& manager) {
  SessionTracker tracker(manager);
  std::vector<std::uint8_t> message;
  for (;;) {
    if (!c.need(2)) return;
    const std::uint8_t b0 = c.buffer()[0];
    const std::uint8_t b1 = c.buffer()[1];
    std::size_t header = 2;
    std::uint64_t len = b1 & 0x7F;
    if (len == 126) header += 2;
    if (len == 127) header += 8;
    const bool masked = (b1 & 0x80) != 0;
    if (masked) header += 4;
    if (!c.need(header)) return;
    const auto& buf = c.buffer();
    if (len == 126) len = (std::uint64_t{buf[2]} << 8) | buf[3];
    else if (len == 127) {
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | buf[2 + i];
    }
    if (len > kMaxFrameBytes + 4) return;
    if (!c.need(header + len)) return;
    std::uint8_t mask[4] = {0, 0, 0, 0};
    if (masked) std::memcpy(mask, c.buffer().data() + header - 4, 4);
    c.take(header);
    std::vector<std::uint8_t> payload = c.take(static_cast<std::size_t>(len));
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] ^= mask[i % 4];

    const std::uint8_t opcode = b0 & 0x0F;
    if (opcode == 0x8) {
      ws_send(c, 0x8, {});
      return;
    }
    if (opcode == 0x9) {
      ws_send(c, 0xA, payload);
      continue;
    }
    if (opcode == 0xA) continue;
    message.insert(message.end(), payload.begin(), payload.end());
    if (!(b0 & 0x80)) continue;

    FrameReader reader;
    reader.feed(message.data(), message.size());
    message.clear();
    try {
      auto msg = reader.next();
      if (!msg || reader.buffered() != 0) throw ContractError("each WebSocket message must carry exactly one frame");
      for (const auto& reply : tracker.handle(*msg))
        if (!ws_send(c, 0x2, encode_frame(reply))) return;
    } catch (const ContractError& e) {
      if (!ws_send(c, 0x2, encode_frame(make_error("bad_frame", e.what())))) return;
    }
  }
}

void run_http(Connection& c, SessionManager& manager, const ServerOptions& options) {
  std::string request;
  for (;;) {
    request.assign(c.buffer().begin(), c.buffer().end());
    const auto end = request.find("\r\n\r\n");
    if (end != std::string::npos) {
      c.take(end + 4);
      request.resize(end + 4);
      break;
    }
    if (request.size() > 65536 || !c.fill()) return;
  }
  std::istringstream first(request);
  std::string method, target;
  first >> method >> target;
  const std::string upgrade = header_value(request, "upgrade");
  if (upgrade.size() == 9 && std::equal(upgrade.begin(), upgrade.end(), "websocket",
                                        [](char a, char b) { return std::tolower(a) == b; })) {
    const std::string key = header_value(request, "sec-websocket-key");
    if (key.empty()) return http_reply(c, 400, "Bad Request", "text/plain", "missing Sec-WebSocket-Key\n");
    const std::string head = fmt::format(
        "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Accept: "
        "{}\r\n\r\n",
        websocket_accept_key(key));
    if (!c.send_all(head.data(), head.size())) return;
    return run_websocket(c, manager);
  }
  serve_static(c, target, options.ui_dir);
}

void handle_connection(int fd, SessionManager& manager, const ServerOptions& options,
                       const std::function<bool()>& stop) {
  Connection c(fd, stop);
  if (!c.need(4)) return;
  if (std::memcmp(c.buffer().data(), "GET ", 4) == 0) run_http(c, manager, options);
  else run_raw(c, manager);
}

}  // namespace

void serve(SessionManager& manager, const ServerOptions& options, const std::function<bool()>& stop,
           const std::function<void(int)>& on_listening) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw std::runtime_error(fmt::format("socket: {}", std::strerror(errno)));
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options.port));
  if (::inet_pton(AF_INET, options.bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listener);
    throw std::runtime_error(fmt::format("invalid bind address '{}'", options.bind_address));
  }
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listener, 16) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listener);
    throw std::runtime_error(fmt::format("cannot listen on {}:{}: {}", options.bind_address, options.port, err));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  std::list<std::thread> workers;
  while (!stop()) {
    pollfd p{listener, POLLIN, 0};
    if (::poll(&p, 1, 200) <= 0) continue;
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) continue;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    workers.emplace_back([fd, &manager, &options, &stop] { handle_connection(fd, manager, options, stop); });
  }
  ::close(listener);
  for (auto& t : workers) t.join();
}

}  // namespace loconav
