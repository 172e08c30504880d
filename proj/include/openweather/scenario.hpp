#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "openweather/engine.hpp"
#include "openweather/virtual_network.hpp"

namespace owp {

struct ScenarioNode {
  std::string name;
  NodeConfig config;
  std::string ip;
  GeneratorConfig generator;
  int line = 0;
};

struct ScenarioLink {
  std::string a;
  std::string b;
  LinkSpec spec;
};

struct ScenarioCommand {
  std::int64_t at_ms = 0;
  std::string node;
  std::string verb;
  std::vector<std::string> args;
  int line = 0;
};

// Plain-text scenario:
//
//   epoch 2011-07-25T14:15:35Z
//   until 6000
//   node n1 seed=1 port=62535 ip=172.21.25.16 bandwidth=6 location="6672224 385565 35V"
//   link n1 n2 latency_ms=20 bandwidth=100000000
//   at 0 n1 handshake n2
//
// Node keys: seed port services ip bandwidth location id keep_alive
// update_interval peers_requested interval temp rh pressure wind_dir
// wind_speed dir_lull dir_gust speed_lull speed_gust rain walk.
// Commands: handshake, discover, peers, stream, stop, alive, close <peer>;
// fetch <peer> <timestamp|+ms> <service,...>.
struct Scenario {
  Timestamp epoch{};
  std::optional<std::int64_t> until_ms;
  std::vector<ScenarioNode> nodes;
  std::vector<ScenarioLink> links;
  std::vector<ScenarioCommand> commands;

  // Throws ScenarioError with the offending line number.
  static Scenario parse(std::istream& in);
  static Scenario load(const std::string& path);

  const ScenarioNode* node(const std::string& name) const;
};

enum class TraceKind { kSend, kRecv, kApp, kClose };

struct TraceEvent {
  std::int64_t time_ms = 0;
  TraceKind kind = TraceKind::kSend;
  std::string node;
  std::string peer;
  ConnectionId connection = 0;
  int type = 0;
  std::size_t bytes = 0;          // encoded message, newline excluded
  std::int64_t tx_ms = 0;         // kSend: serialization time of the frame
  std::int64_t arrival_ms = -1;   // kSend: scheduled delivery, -1 when lost
  std::string detail;
};

std::string format_trace(const TraceEvent& e);

// Runs a scenario over the virtual network. Every node samples at its
// generator interval starting at t=0 and sweeps keep-alives once a second.
class Simulation {
 public:
  explicit Simulation(Scenario scenario);
  ~Simulation();

  // Runs to `until` (default: last command + 1000 ms). Throws ScenarioError
  // when a command cannot be carried out.
  const std::vector<TraceEvent>& run();

  const std::vector<TraceEvent>& trace() const { return trace_; }
  Engine& engine(const std::string& node);
  const Session* session(const std::string& node, const std::string& peer) const;
  VirtualNetwork& network() { return net_; }

 private:
  struct Node;

  Node& node(const std::string& name);
  void deliver(const Delivery& d);
  void apply(Node& n, Actions actions);
  void execute(const ScenarioCommand& c);
  TimePoint clock() const;

  Scenario scenario_;
  VirtualNetwork net_;
  std::map<std::string, std::unique_ptr<Node>> nodes_;
  std::vector<TraceEvent> trace_;
};

}  // namespace owp
