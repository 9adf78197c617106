#include "pipemdp/env_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "pipemdp/errors.hpp"

namespace pipemdp {

using nlohmann::json;

namespace {

std::string error_reply(const char* code, const std::string& message) {
  return json{{"error", {{"code", code}, {"message", message}}}}.dump();
}

json obs_json(const Observation& obs) { return json(obs); }

}  // namespace

std::optional<std::string> StreamTransport::read_line() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void StreamTransport::write_line(const std::string& line) { out_ << line << '\n' << std::flush; }

FdTransport::~FdTransport() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<std::string> FdTransport::read_line() {
  for (;;) {
    if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void FdTransport::write_line(const std::string& line) {
  const std::string data = line + '\n';
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return;
    sent += static_cast<std::size_t>(n);
  }
}

Session::Session(EnvConfig cfg, std::shared_ptr<const EnvModels> models) : env_(std::move(cfg), std::move(models)) {}

std::string Session::handle(const std::string& line) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::parse_error& e) {
    return error_reply("PROTOCOL", std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("op") || !req.at("op").is_string()) {
    return error_reply("PROTOCOL", "request must be an object with a string 'op'");
  }
  const std::string op = req.at("op").get<std::string>();
  const auto& cfg = env_.config();

  if (op == "spec") {
    return json{{"obs_dim", kObsDim},
                {"n_actions", kActionCount},
                {"decision_interval", cfg.decision_interval},
                {"horizon", cfg.horizon},
                {"n_segments", cfg.segments()},
                {"reward_normalizer", cfg.reward_normalizer()},
                {"dynamics", cfg.dynamics->label()},
                {"prognosis", cfg.prognosis->label()}}
        .dump();
  }

  if (op == "reset") {
    std::optional<std::uint64_t> seed;
    std::optional<double> start_age;
    if (req.contains("seed") && !req.at("seed").is_null()) {
      if (!req.at("seed").is_number_unsigned()) return error_reply("CONFIG", "seed must be a nonnegative integer");
      seed = req.at("seed").get<std::uint64_t>();
    }
    if (req.contains("start_age") && !req.at("start_age").is_null()) {
      if (!req.at("start_age").is_number() || !(req.at("start_age").get<double>() >= 0.0)) {
        return error_reply("CONFIG", "start_age must be a number >= 0");
      }
      start_age = req.at("start_age").get<double>();
    }
    const PipeState& s = seed ? env_.reset(*seed, start_age) : env_.reset(start_age);
    episode_done_ = false;
    return json{{"obs", obs_json(observe(s))}, {"info", {{"age", s.age}, {"elapsed", s.elapsed}}}}.dump();
  }

  if (op == "step") {
    if (!env_.has_state()) return error_reply("PROTOCOL", "reset is required before step");
    if (episode_done_) return error_reply("PROTOCOL", "episode is done; reset to start a new one");
    if (!req.contains("action") || !req.at("action").is_number_integer()) {
      return error_reply("PROTOCOL", "step needs an integer 'action'");
    }
    const auto raw = req.at("action").get<long long>();
    if (raw < 0 || raw >= kActionCount) return error_reply("PROTOCOL", "action must be 0, 1 or 2");
    const StepResult res = env_.step(static_cast<Action>(raw));
    episode_done_ = res.done;
    return json{{"obs", obs_json(observe(res.state))},
                {"reward", res.reward.r},
                {"done", res.done},
                {"info",
                 {{"c_m", res.reward.c_m},
                  {"c_r", res.reward.c_r},
                  {"c_f", res.reward.c_f},
                  {"age", res.state.age},
                  {"elapsed", res.state.elapsed}}}}
        .dump();
  }

  if (op == "close") {
    closed_ = true;
    return json{{"closed", true}}.dump();
  }

  return error_reply("PROTOCOL", "unknown op '" + op + "'");
}

void serve_session(Transport& transport, const EnvConfig& cfg, std::shared_ptr<const EnvModels> models) {
  Session session(cfg, std::move(models));
  while (auto line = transport.read_line()) {
    if (line->empty()) continue;
    std::string reply;
    try {
      reply = session.handle(*line);
    } catch (const std::exception& e) {
      reply = error_reply("INTERNAL", e.what());
    }
    transport.write_line(reply);
    if (session.closed()) break;
  }
}

EnvServer::EnvServer(EnvConfig cfg, std::shared_ptr<const EnvModels> models)
    : cfg_(std::move(cfg)), models_(std::move(models)) {
  cfg_.validate();
  if (!models_) models_ = EnvModels::build(cfg_);
}

EnvServer::~EnvServer() {
  stop();
  std::vector<std::jthread> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    sessions.swap(sessions_);
  }
  sessions.clear();  // joins
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    if (!unix_path_.empty()) ::unlink(unix_path_.c_str());
  }
}

std::string EnvServer::bind(const std::string& endpoint) {
  if (endpoint.starts_with("unix:")) {
    unix_path_ = endpoint.substr(5);
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (unix_path_.empty() || unix_path_.size() >= sizeof addr.sun_path) throw BindError("invalid unix socket path");
    std::strncpy(addr.sun_path, unix_path_.c_str(), sizeof addr.sun_path - 1);
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw BindError(std::strerror(errno));
    ::unlink(unix_path_.c_str());
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
      const std::string msg = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw BindError("cannot bind " + endpoint + ": " + msg);
    }
    return endpoint;
  }
  if (endpoint.starts_with("tcp:")) {
    const std::string rest = endpoint.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw BindError("tcp endpoint must be tcp:<host>:<port>");
    const std::string host = rest.substr(0, colon);
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw BindError("invalid tcp port in " + endpoint);
    }
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw BindError("invalid IPv4 address " + host);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw BindError(std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
      const std::string msg = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw BindError("cannot bind " + endpoint + ": " + msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return "tcp:" + host + ":" + std::to_string(ntohs(addr.sin_port));
  }
  throw BindError("endpoint must be unix:<path> or tcp:<host>:<port>");
}

void EnvServer::run() {
  if (listen_fd_ < 0) throw BindError("server is not bound");
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(sessions_mutex_);
    session_fds_.push_back(fd);
    sessions_.emplace_back([this, fd] {
      FdTransport transport(fd);
      serve_session(transport, cfg_, models_);
      std::lock_guard done(sessions_mutex_);
      std::erase(session_fds_, fd);
    });
  }
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (!unix_path_.empty()) ::unlink(unix_path_.c_str());
}

void EnvServer::stop() {
  stopping_ = true;
  std::lock_guard lock(sessions_mutex_);
  // Unblocks sessions waiting in recv(); descriptors are closed by their transports.
  for (int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
}

}  // namespace pipemdp
