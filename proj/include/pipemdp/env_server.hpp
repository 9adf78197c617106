#pragma once

#include <atomic>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pipemdp/pipe_env.hpp"

namespace pipemdp {

/// Line-delimited byte stream carrying one session.
class Transport {
 public:
  virtual ~Transport() = default;
  /// Next line without its terminator; nullopt at end of stream.
  virtual std::optional<std::string> read_line() = 0;
  virtual void write_line(const std::string& line) = 0;
};

class StreamTransport final : public Transport {
 public:
  StreamTransport(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  std::optional<std::string> read_line() override;
  void write_line(const std::string& line) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

/// Owns a connected socket descriptor.
class FdTransport final : public Transport {
 public:
  explicit FdTransport(int fd) : fd_(fd) {}
  ~FdTransport() override;
  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  std::optional<std::string> read_line() override;
  void write_line(const std::string& line) override;

 private:
  int fd_;
  std::string buffer_;
};

/// One environment behind the JSON-lines protocol. Requests:
///   {"op":"spec"}
///   {"op":"reset", "seed":42, "start_age":0}     (both optional)
///   {"op":"step", "action":0|1|2}
///   {"op":"close"}
/// Errors come back as {"error":{"code":"PROTOCOL"|"CONFIG","message":...}}
/// and leave the session usable.
class Session {
 public:
  Session(EnvConfig cfg, std::shared_ptr<const EnvModels> models);

  /// Handles one request line and returns the reply line.
  std::string handle(const std::string& line);
  bool closed() const { return closed_; }

 private:
  PipeEnv env_;
  bool closed_ = false;
  bool episode_done_ = false;
};

/// Runs request/reply until "close" or end of stream.
void serve_session(Transport& transport, const EnvConfig& cfg, std::shared_ptr<const EnvModels> models = nullptr);

/// Accepts connections on "unix:<path>" or "tcp:<host>:<port>" and serves
/// one session per connection on its own thread.
class EnvServer {
 public:
  EnvServer(EnvConfig cfg, std::shared_ptr<const EnvModels> models = nullptr);
  ~EnvServer();

  /// Binds and listens. Returns the bound address (the actual port when 0
  /// was requested). Throws BindError.
  std::string bind(const std::string& endpoint);
  /// Accept loop; returns after stop() and releases the listening socket.
  void run();
  void stop();

 private:
  EnvConfig cfg_;
  std::shared_ptr<const EnvModels> models_;
  int listen_fd_ = -1;
  std::string unix_path_;
  std::atomic<bool> stopping_{false};
  std::mutex sessions_mutex_;
  std::vector<std::jthread> sessions_;
  std::vector<int> session_fds_;
};

}  // namespace pipemdp
