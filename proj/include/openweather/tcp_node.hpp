#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "openweather/engine.hpp"
#include "openweather/framing.hpp"

namespace owp {

struct TcpNodeOptions {
  NodeConfig config;
  std::string bind_address = "0.0.0.0";
  // Peer-IP placed in MetaInfo; the local socket address when empty.
  std::string advertised_ip;
  bool listen = true;
  std::optional<GeneratorConfig> generator;
  std::vector<PeerRecord> bootstrap;
  Millis sweep_interval{1000};
  std::uint64_t seed = 0;
};

// Engine driven by non-blocking sockets and a single poll() loop. Every
// engine call happens on the thread calling poll_once(), so engine state
// needs no locking.
class TcpNode {
 public:
  // Binds when options.listen is set; port 0 picks an ephemeral port.
  // Throws TransportError carrying the OS error.
  explicit TcpNode(TcpNodeOptions options);
  ~TcpNode();
  TcpNode(const TcpNode&) = delete;
  TcpNode& operator=(const TcpNode&) = delete;

  std::uint16_t port() const { return port_; }

  // Blocking connect, then non-blocking I/O. Throws TransportError.
  SessionId connect(const std::string& host, std::uint16_t port);

  // Runs `op` against a session and sends what it returns. Engine errors
  // (StateError, ArgumentError) propagate.
  void perform(SessionId id, const std::function<Actions(Engine&, Session&, TimePoint)>& op);

  // Stores a sample from an external source and streams it.
  void ingest(const NormalizedSample& sample);

  // One round of timers and I/O, waiting at most `timeout` for activity.
  void poll_once(Millis timeout);

  // Loops until `stop` becomes true.
  void run(const std::atomic<bool>& stop);

  Engine& engine() { return engine_; }
  const Session* session(SessionId id) const;
  std::vector<SessionId> session_ids() const;

  // Human-readable event lines (sends, receipts, closures).
  std::function<void(const std::string&)> on_log;

 private:
  struct Connection;

  void accept_all();
  void read_from(Connection& c);
  void flush(Connection& c);
  void drop(SessionId id, const std::string& reason);
  void apply(Actions actions);
  void timers(TimePoint now);
  void use_address(const Connection& c);
  void log(const std::string& line);

  TcpNodeOptions options_;
  Engine engine_;
  std::optional<SampleGenerator> generator_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  SessionId next_id_ = 1;
  std::map<SessionId, std::unique_ptr<Connection>> connections_;
  std::optional<TimePoint> next_sample_;
  std::optional<TimePoint> next_sweep_;
};

enum class ExitCode : int { kOk = 0, kUsage = 1, kTransport = 2, kProtocol = 3, kTimeout = 4 };

struct OneShotRequest {
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultPort;
  // handshake, discover, peers, stream, fetch
  std::string command;
  int count = 1;
  Timestamp at{};
  std::vector<Service> services;
  Millis timeout{2 * kDefaultKeepAliveMs};
};

struct OneShotResult {
  ExitCode code = ExitCode::kOk;
  // Canonical JSON payloads, or "status <code> <name>" lines.
  std::vector<std::string> lines;
  std::string error;
};

// Connects, handshakes, performs one operation and collects the replies.
OneShotResult run_oneshot(const NodeConfig& config, const OneShotRequest& request,
                          const std::function<void(const std::string&)>& log = {});

}  // namespace owp
