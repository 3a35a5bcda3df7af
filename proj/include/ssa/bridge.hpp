#pragma once

#include <atomic>
#include <chrono>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include "ssa/augment.hpp"
#include "ssa/io.hpp"

namespace ssa {

// Client side of the model bridge: one JSON object per line in each
// direction.
//   request:  {"op": ..., "payload": ..., "request_id": ...}
//   response: {"request_id": ..., "ok": bool, "result": ..., "error": ...}
// Responses may arrive in any order; request_id correlates them.

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  // nullopt on end of stream.
  virtual std::optional<std::string> read_line() = 0;
  // Unblocks a pending read_line.
  virtual void close() = 0;
};

// TCP connection to host:port. Throws BridgeError when it cannot connect.
std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port);

// Spawns `/bin/sh -c command` and talks over its stdin/stdout.
std::unique_ptr<LineChannel> spawn_process(const std::string& command);

// "tcp:HOST:PORT", "HOST:PORT" or "stdio:COMMAND".
std::unique_ptr<LineChannel> open_channel(const std::string& address);

struct BridgeResponse {
  std::string request_id;
  bool ok = false;
  Json result;
  std::optional<std::string> error;
};

class BridgeClient {
 public:
  explicit BridgeClient(std::unique_ptr<LineChannel> channel, size_t max_in_flight = 8,
                        std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~BridgeClient();

  BridgeClient(const BridgeClient&) = delete;
  BridgeClient& operator=(const BridgeClient&) = delete;

  // Thread-safe. Blocks while max_in_flight requests are outstanding.
  // Throws BridgeError on transport failure or timeout; an ok=false reply is
  // returned, not thrown.
  BridgeResponse call(const std::string& op, const std::string& payload);

  // Lines that were not valid responses to an outstanding request.
  size_t stray_lines() const { return stray_.load(); }

 private:
  void read_loop();
  void fail_pending(const std::string& why);

  std::unique_ptr<LineChannel> channel_;
  std::counting_semaphore<> slots_;
  std::chrono::milliseconds timeout_;
  std::mutex write_mu_;
  std::mutex pending_mu_;
  std::map<std::string, std::promise<BridgeResponse>> pending_;
  std::optional<std::string> closed_;  // reason, once the stream ended
  std::atomic<uint64_t> next_id_{0};
  std::atomic<size_t> stray_{0};
  std::thread reader_;
};

class BridgeGenerator : public TextGenerator {
 public:
  explicit BridgeGenerator(std::shared_ptr<BridgeClient> client) : client_(std::move(client)) {}
  // Throws GeneratorUnavailable.
  std::string generate(const AmrGraph& graph) override;

 private:
  std::shared_ptr<BridgeClient> client_;
};

class BridgeScorer : public QualityScorer {
 public:
  explicit BridgeScorer(std::shared_ptr<BridgeClient> client) : client_(std::move(client)) {}
  // Throws ScorerUnavailable.
  double score(std::string_view caption) override;

 private:
  std::shared_ptr<BridgeClient> client_;
};

// Text-to-AMR through the bridge; returns PENMAN text. Throws BridgeError.
std::string bridge_text_to_amr(BridgeClient& client, const std::string& text);

}  // namespace ssa
