#include "ssa/bridge.hpp"

#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "ssa/error.hpp"

namespace ssa {

namespace {

// Buffered line reader/writer over a pair of file descriptors.
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  void write_line(const std::string& line) override {
    std::string data = line + '\n';
    size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = send_bytes(data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("write failed: ") + std::strerror(errno));
      }
      off += static_cast<size_t>(n);
    }
  }

  std::optional<std::string> read_line() override {
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 protected:
  virtual ssize_t send_bytes(const char* p, size_t n) { return ::write(write_fd_, p, n); }

  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

class TcpChannel : public FdChannel {
 public:
  explicit TcpChannel(int fd) : FdChannel(fd, fd) {}
  ~TcpChannel() override {
    close();
    ::close(read_fd_);
  }
  void close() override { ::shutdown(read_fd_, SHUT_RDWR); }

 protected:
  ssize_t send_bytes(const char* p, size_t n) override {
    return ::send(write_fd_, p, n, MSG_NOSIGNAL);
  }
};

class ProcessChannel : public FdChannel {
 public:
  ProcessChannel(pid_t pid, int read_fd, int write_fd)
      : FdChannel(read_fd, write_fd), pid_(pid) {}
  ~ProcessChannel() override {
    close();
    ::close(read_fd_);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
  void close() override {
    std::lock_guard lock(mu_);
    if (closed_) return;
    closed_ = true;
    ::close(write_fd_);
    ::kill(pid_, SIGTERM);
  }

 private:
  pid_t pid_;
  std::mutex mu_;
  bool closed_ = false;
};

std::string id_string(const Json& id) {
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<long long>());
  return id.dump();
}

}  // namespace

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    throw BridgeError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw BridgeError("cannot connect to " + host + ":" + service);
  return std::make_unique<TcpChannel>(fd);
}

std::unique_ptr<LineChannel> spawn_process(const std::string& command) {
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0) throw BridgeError("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw BridgeError("pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw BridgeError("fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  // A dead child must surface as a write error, not kill us.
  ::signal(SIGPIPE, SIG_IGN);
  return std::make_unique<ProcessChannel>(pid, from_child[0], to_child[1]);
}

std::unique_ptr<LineChannel> open_channel(const std::string& address) {
  if (address.rfind("stdio:", 0) == 0) {
    const std::string command = address.substr(6);
    if (command.empty()) throw ConfigError("empty bridge command in '" + address + "'");
    return spawn_process(command);
  }
  std::string rest = address.rfind("tcp:", 0) == 0 ? address.substr(4) : address;
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0)
    throw ConfigError("bridge address '" + address + "' is not HOST:PORT");
  int port = 0;
  try {
    size_t used = 0;
    port = std::stoi(rest.substr(colon + 1), &used);
    if (used != rest.size() - colon - 1 || port <= 0 || port > 65535) throw std::out_of_range("");
  } catch (const std::exception&) {
    throw ConfigError("bad port in bridge address '" + address + "'");
  }
  return connect_tcp(rest.substr(0, colon), port);
}

// ---------------------------------------------------------------------------

BridgeClient::BridgeClient(std::unique_ptr<LineChannel> channel, size_t max_in_flight,
                           std::chrono::milliseconds timeout)
    : channel_(std::move(channel)),
      slots_(static_cast<std::ptrdiff_t>(std::max<size_t>(1, max_in_flight))),
      timeout_(timeout) {
  reader_ = std::thread([this] { read_loop(); });
}

BridgeClient::~BridgeClient() {
  channel_->close();
  if (reader_.joinable()) reader_.join();
}

void BridgeClient::fail_pending(const std::string& why) {
  std::lock_guard lock(pending_mu_);
  closed_ = why;
  for (auto& [id, promise] : pending_)
    promise.set_exception(std::make_exception_ptr(BridgeError(why)));
  pending_.clear();
}

void BridgeClient::read_loop() {
  while (auto line = channel_->read_line()) {
    BridgeResponse r;
    try {
      const Json j = Json::parse(*line);
      r.request_id = id_string(j.at("request_id"));
      r.ok = j.at("ok").get<bool>();
      r.result = j.value("result", Json(nullptr));
      if (auto it = j.find("error"); it != j.end() && !it->is_null())
        r.error = it->is_string() ? it->get<std::string>() : it->dump();
    } catch (const Json::exception&) {
      ++stray_;
      continue;
    }
    std::lock_guard lock(pending_mu_);
    auto it = pending_.find(r.request_id);
    if (it == pending_.end()) {
      ++stray_;
      continue;
    }
    it->second.set_value(std::move(r));
    pending_.erase(it);
  }
  fail_pending("bridge connection closed");
}

BridgeResponse BridgeClient::call(const std::string& op, const std::string& payload) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};

  const std::string id = "r" + std::to_string(next_id_++);
  std::future<BridgeResponse> reply;
  {
    std::lock_guard lock(pending_mu_);
    if (closed_) throw BridgeError(*closed_);
    reply = pending_[id].get_future();
  }
  const Json request{{"op", op}, {"payload", payload}, {"request_id", id}};
  try {
    std::lock_guard lock(write_mu_);
    channel_->write_line(request.dump());
  } catch (const BridgeError&) {
    std::lock_guard lock(pending_mu_);
    pending_.erase(id);
    throw;
  }
  if (reply.wait_for(timeout_) != std::future_status::ready) {
    std::lock_guard lock(pending_mu_);
    pending_.erase(id);
    throw BridgeError("no reply to " + op + " request " + id);
  }
  return reply.get();
}

std::string BridgeGenerator::generate(const AmrGraph& graph) {
  BridgeResponse r;
  try {
    r = client_->call("amr_to_text", serialize_penman(graph));
  } catch (const BridgeError& e) {
    throw GeneratorUnavailable(e.what());
  }
  if (!r.ok) throw GeneratorUnavailable(r.error.value_or("amr_to_text failed"));
  if (!r.result.is_string()) throw GeneratorUnavailable("amr_to_text result is not text");
  return r.result.get<std::string>();
}

double BridgeScorer::score(std::string_view caption) {
  BridgeResponse r;
  try {
    r = client_->call("gruen", std::string(caption));
  } catch (const BridgeError& e) {
    throw ScorerUnavailable(e.what());
  }
  if (!r.ok) throw ScorerUnavailable(r.error.value_or("gruen failed"));
  if (!r.result.is_number()) throw ScorerUnavailable("gruen result is not a number");
  const double s = r.result.get<double>();
  if (!(s >= 0 && s <= 1)) throw ScorerUnavailable("gruen score outside [0, 1]");
  return s;
}

std::string bridge_text_to_amr(BridgeClient& client, const std::string& text) {
  const BridgeResponse r = client.call("text_to_amr", text);
  if (!r.ok) throw BridgeError(r.error.value_or("text_to_amr failed"));
  if (!r.result.is_string()) throw BridgeError("text_to_amr result is not PENMAN text");
  return r.result.get<std::string>();
}

}  // namespace ssa
