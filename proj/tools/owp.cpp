// owp: run an OpenWeather node, replay a simulated topology, or perform a
// single protocol operation against a running node.

#include <csignal>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "openweather/codec.hpp"
#include "openweather/errors.hpp"
#include "openweather/scenario.hpp"
#include "openweather/tcp_node.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct NodeFlags {
  std::uint16_t port = owp::kDefaultPort;
  std::string id;
  std::string location = "0 0 31N";
  std::uint64_t bandwidth = 0;
  std::int64_t keep_alive = owp::kDefaultKeepAliveMs;
  std::int64_t update_interval = owp::kDefaultUpdateIntervalMs;
  std::int64_t peers_requested = owp::kDefaultPeersRequested;
  std::string bootstrap;
  std::string mapping;
  std::uint64_t seed = 0;
  std::int64_t interval = 3000;
  std::string advertise;
  int verbose = 0;
};

std::uint16_t default_port() {
  if (const char* env = std::getenv("OWP_PORT")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0 && v <= 65535) return static_cast<std::uint16_t>(v);
    std::cerr << "owp: ignoring invalid OWP_PORT '" << env << "'\n";
  }
  return owp::kDefaultPort;
}

void add_node_flags(CLI::App* app, NodeFlags& f) {
  app->add_option("--port", f.port, "TCP listen port (env OWP_PORT)")->capture_default_str();
  app->add_option("--id", f.id, "node ID, 64 lowercase hex characters (random when omitted)");
  app->add_option("--location", f.location, "\"<northing> <easting> <zone>\"")->capture_default_str();
  app->add_option("--bandwidth", f.bandwidth, "bandwidth class 0..6 or bit rate")->capture_default_str();
  app->add_option("--keep-alive", f.keep_alive, "keep-alive in ms")->capture_default_str();
  app->add_option("--update-interval", f.update_interval, "update interval in ms")->capture_default_str();
  app->add_option("--peers-requested", f.peers_requested, "peers asked for in a peer list (1..100)")
      ->capture_default_str();
  app->add_option("--seed", f.seed, "RNG seed for sampling and peer selection")->capture_default_str();
  app->add_option("--advertise", f.advertise, "Peer-IP to advertise instead of the socket address");
  app->add_flag("-v,--verbose", f.verbose, "log every message sent and received");
}

owp::NodeConfig make_config(const NodeFlags& f) {
  owp::NodeConfig c;
  if (f.id.empty()) {
    c.id = owp::random_node_id();
  } else {
    auto id = owp::NodeId::parse(f.id);
    if (!id) throw owp::ArgumentError("--id must be 64 lowercase hex characters");
    c.id = *id;
  }
  auto loc = owp::UtmLocation::parse(f.location);
  if (!loc) throw owp::ArgumentError("--location must be \"<northing> <easting> <zone>\"");
  c.location = *loc;
  c.listen_port = f.port;
  c.bandwidth = owp::BandwidthClass{f.bandwidth};
  c.keep_alive_ms = f.keep_alive;
  c.update_interval_ms = f.update_interval;
  c.peers_requested = f.peers_requested;
  if (c.keep_alive_ms <= 0) throw owp::ArgumentError("--keep-alive must be positive");
  if (c.update_interval_ms <= 0) throw owp::ArgumentError("--update-interval must be positive");
  if (c.peers_requested < 1 || c.peers_requested > owp::kMaxPeersRequested) {
    throw owp::ArgumentError("--peers-requested must be within 1..100");
  }
  return c;
}

std::vector<owp::Service> parse_services(const std::string& text) {
  std::vector<owp::Service> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto svc = owp::parse_service(item);
    if (!svc) throw owp::ArgumentError("unknown service '" + item + "'");
    out.push_back(*svc);
  }
  return out;
}

int run_sim(const std::string& path) {
  owp::Simulation sim(owp::Scenario::load(path));
  for (const auto& e : sim.run()) std::cout << owp::format_trace(e) << '\n';
  return 0;
}

int run_tcp(const NodeFlags& f, const std::string& serial) {
  owp::TcpNodeOptions opts;
  opts.config = make_config(f);
  opts.advertised_ip = f.advertise;
  opts.seed = f.seed;
  if (!f.bootstrap.empty()) {
    std::ifstream in(f.bootstrap);
    if (!in) throw owp::ArgumentError("cannot open bootstrap file " + f.bootstrap);
    opts.bootstrap = owp::load_bootstrap(in, owp::system_now());
  }
  owp::KeyTable keys = owp::KeyTable::builtin();
  if (!f.mapping.empty()) {
    std::ifstream in(f.mapping);
    if (!in) throw owp::ArgumentError("cannot open mapping file " + f.mapping);
    keys.load(in);
  }
  if (serial.empty()) {
    owp::GeneratorConfig g;
    g.seed = f.seed;
    g.interval_ms = f.interval;
    opts.generator = g;
  }

  owp::TcpNode node(opts);
  if (f.verbose) node.on_log = [](const std::string& line) { std::cerr << line << '\n'; };
  std::cerr << "owp: node " << opts.config.id.hex() << " listening on port " << node.port() << '\n';

  // The reader thread may still be blocked in getline at shutdown, so the
  // queue it fills is shared rather than owned by this frame.
  struct LineQueue {
    std::mutex mu;
    std::deque<std::string> lines;
  };
  auto queue = std::make_shared<LineQueue>();
  if (!serial.empty()) {
    std::thread([queue, serial] {
      std::ifstream file;
      std::istream* in = &std::cin;
      if (serial != "-") {
        file.open(serial);
        if (!file) std::cerr << "owp: cannot open serial source " << serial << '\n';
        in = &file;
      }
      std::string line;
      while (!g_stop.load() && std::getline(*in, line)) {
        std::lock_guard<std::mutex> lock(queue->mu);
        queue->lines.push_back(line);
      }
    }).detach();
  }

  owp::SerialIngest ingest(keys);
  while (!g_stop.load()) {
    node.poll_once(owp::Millis{200});
    std::deque<std::string> batch;
    {
      std::lock_guard<std::mutex> lock(queue->mu);
      batch.swap(queue->lines);
    }
    for (const auto& line : batch) {
      try {
        std::vector<std::string> warnings;
        auto sample = ingest.feed(line, owp::to_timestamp(owp::system_now()), &warnings);
        for (const auto& w : warnings) std::cerr << "owp: serial: " << w << '\n';
        if (sample) node.ingest(*sample);
      } catch (const owp::Error& e) {
        std::cerr << "owp: serial: " << e.what() << '\n';
      }
    }
  }
  std::cerr << "owp: shutting down\n";
  return 0;
}

int run_oneshot(const NodeFlags& f, const std::string& command, const std::string& target, int count,
                const std::string& at, const std::string& services, std::int64_t timeout_ms) {
  owp::OneShotRequest req;
  req.command = command;
  req.count = count;
  req.port = default_port();
  auto colon = target.rfind(':');
  if (colon != std::string::npos && target.find(':') == colon) {
    req.host = target.substr(0, colon);
    std::string port = target.substr(colon + 1);
    char* end = nullptr;
    long v = std::strtol(port.c_str(), &end, 10);
    if (port.empty() || *end != '\0' || v < 1 || v > 65535) throw owp::ArgumentError("bad port in target " + target);
    req.port = static_cast<std::uint16_t>(v);
  } else {
    req.host = target;
  }
  if (command == "fetch") {
    auto ts = owp::parse_timestamp(at);
    if (!ts) throw owp::ArgumentError("--at must be an RFC 3339 timestamp");
    req.at = *ts;
    req.services = parse_services(services);
  }
  owp::NodeConfig config = make_config(f);
  req.timeout = owp::Millis{timeout_ms > 0 ? timeout_ms : 2 * config.keep_alive_ms};

  std::function<void(const std::string&)> log;
  if (f.verbose) log = [](const std::string& line) { std::cerr << line << '\n'; };
  owp::OneShotResult r = owp::run_oneshot(config, req, log);
  for (const auto& line : r.lines) std::cout << line << '\n';
  if (!r.error.empty()) std::cerr << "owp: " << r.error << '\n';
  return static_cast<int>(r.code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OpenWeather peer-to-peer weather data node"};
  app.require_subcommand(1);

  NodeFlags flags;
  flags.port = default_port();

  auto* run = app.add_subcommand("run", "run a node over TCP or replay a simulated scenario");
  add_node_flags(run, flags);
  std::string transport = "tcp";
  std::string scenario;
  std::string serial;
  run->add_option("--transport", transport, "tcp or sim")->check(CLI::IsMember({"tcp", "sim"}))->capture_default_str();
  run->add_option("--scenario", scenario, "scenario file for --transport sim");
  run->add_option("--bootstrap", flags.bootstrap, "super-node file: <id> <ip> <port> <class> per line");
  run->add_option("--mapping", flags.mapping, "vendor key mapping file");
  run->add_option("--interval", flags.interval, "sample interval in ms")->capture_default_str();
  run->add_option("--serial", serial, "read vendor lines from a path, or - for stdin, instead of generating");

  std::string target;
  int count = 1;
  std::string at;
  std::string services = "PTU,WIND,PRECIPITATION";
  std::int64_t timeout_ms = 0;
  std::string command;
  for (const char* name : {"handshake", "discover", "peers", "stream", "fetch"}) {
    auto* sub = app.add_subcommand(name, std::string("connect to a node and perform ") + name);
    add_node_flags(sub, flags);
    sub->add_option("target", target, "host[:port]")->required();
    sub->add_option("--timeout", timeout_ms, "ms to wait (default twice the keep-alive)");
    if (std::string(name) == "stream") sub->add_option("--count", count, "samples to receive")->capture_default_str();
    if (std::string(name) == "fetch") {
      sub->add_option("--at", at, "timestamp of the stored sample")->required();
      sub->add_option("--services", services, "comma-separated services")->capture_default_str();
    }
    sub->callback([&command, name] { command = name; });
  }

  auto* id = app.add_subcommand("id", "derive a node ID and owp URI from a station record");
  owp::StationDescriptor station;
  id->add_option("--block", station.block, "2-digit WMO block")->required();
  id->add_option("--station", station.station, "3-digit WMO station")->required();
  id->add_option("--place", station.place, "place name")->required();
  id->add_option("--country", station.country, "country name")->required();

  auto* parse = app.add_subcommand("parse", "normalise vendor lines from stdin into Data blocks");
  std::string mapping;
  parse->add_option("--mapping", mapping, "vendor key mapping file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(owp::ExitCode::kUsage);
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (run->parsed()) {
      if (transport == "sim") {
        if (scenario.empty()) throw owp::ArgumentError("--transport sim needs --scenario <file>");
        return run_sim(scenario);
      }
      return run_tcp(flags, serial);
    }
    if (id->parsed()) {
      std::cout << owp::derive_node_id(station).hex() << '\n' << owp::make_owp_uri(station).str() << '\n';
      return 0;
    }
    if (parse->parsed()) {
      owp::KeyTable keys = owp::KeyTable::builtin();
      if (!mapping.empty()) {
        std::ifstream in(mapping);
        if (!in) throw owp::ArgumentError("cannot open mapping file " + mapping);
        keys.load(in);
      }
      owp::SerialIngest ingest(keys);
      std::string line;
      int rc = 0;
      while (std::getline(std::cin, line)) {
        try {
          std::vector<std::string> warnings;
          auto sample = ingest.feed(line, owp::to_timestamp(owp::system_now()), &warnings);
          for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
          if (!sample) continue;
          std::cout << owp::encode_data(owp::to_data_block(*sample)) << '\n';
        } catch (const owp::Error& e) {
          std::cerr << "error: " << e.what() << '\n';
          rc = static_cast<int>(owp::ExitCode::kUsage);
        }
      }
      return rc;
    }
    return run_oneshot(flags, command, target, count, at, services, timeout_ms);
  } catch (const owp::ArgumentError& e) {
    std::cerr << "owp: " << e.what() << '\n';
    return static_cast<int>(owp::ExitCode::kUsage);
  } catch (const owp::ScenarioError& e) {
    std::cerr << "owp: " << e.what() << '\n';
    return static_cast<int>(owp::ExitCode::kUsage);
  } catch (const owp::TransportError& e) {
    std::cerr << "owp: " << e.what() << '\n';
    return static_cast<int>(owp::ExitCode::kTransport);
  } catch (const owp::Error& e) {
    std::cerr << "owp: " << e.what() << '\n';
    return static_cast<int>(owp::ExitCode::kUsage);
  }
}
