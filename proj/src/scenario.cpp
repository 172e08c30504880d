#include "openweather/scenario.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "openweather/codec.hpp"
#include "openweather/errors.hpp"
#include "openweather/framing.hpp"
#include "openweather/net_address.hpp"

namespace owp {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw ScenarioError("scenario line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokenize(const std::string& text, int line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_token = false, quoted = false;
  for (char c : text) {
    if (quoted) {
      if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = in_token = true;
    } else if (c == '#') {
      break;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      if (in_token) out.push_back(std::move(cur));
      cur.clear();
      in_token = false;
    } else {
      cur += c;
      in_token = true;
    }
  }
  if (quoted) fail(line, "unterminated quote");
  if (in_token) out.push_back(std::move(cur));
  return out;
}

template <typename T>
T number(const std::string& text, int line, const std::string& what) {
  T out{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(line, what + " must be an integer, got '" + text + "'");
  }
  return out;
}

// "19.1" -> 191. At most one fractional digit.
std::int64_t tenths(const std::string& text, int line, const std::string& what) {
  auto d = Decimal::parse(text);
  auto dot = text.find('.');
  if (!d || (dot != std::string::npos && text.size() - dot - 1 > 1)) {
    fail(line, what + " must be a decimal with at most one fractional digit");
  }
  std::string digits = text;
  if (dot == std::string::npos) {
    digits += "0";
  } else {
    digits.erase(dot, 1);
  }
  return number<std::int64_t>(digits, line, what);
}

std::map<std::string, std::string> options(const std::vector<std::string>& tokens, std::size_t from,
                                           int line) {
  std::map<std::string, std::string> out;
  for (std::size_t i = from; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string::npos || eq == 0) fail(line, "expected key=value, got '" + tokens[i] + "'");
    out[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  return out;
}

ServiceCatalog parse_catalog(const std::string& text, int line) {
  ServiceCatalog c;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string flags = "RO";
    if (auto colon = item.find(':'); colon != std::string::npos) {
      flags = item.substr(colon + 1);
      item.resize(colon);
    }
    auto svc = parse_service(item);
    auto f = parse_flags(flags);
    if (!svc) fail(line, "unknown service '" + item + "'");
    if (!f) fail(line, "service flags must be R, O or RO");
    c.services[*svc] = *f;
  }
  return c;
}

ScenarioNode parse_node(const std::vector<std::string>& t, int line, std::size_t index) {
  if (t.size() < 2) fail(line, "node needs a name");
  ScenarioNode n;
  n.name = t[1];
  n.line = line;
  n.ip = "10.0.0." + std::to_string(index + 1);
  std::uint64_t seed = 0;
  for (const auto& [key, value] : options(t, 2, line)) {
    if (key == "seed") {
      seed = number<std::uint64_t>(value, line, key);
    } else if (key == "port") {
      n.config.listen_port = number<std::uint16_t>(value, line, key);
    } else if (key == "services") {
      n.config.services = parse_catalog(value, line);
    } else if (key == "ip") {
      if (!valid_ip_address(value)) fail(line, "ip is not an IP address");
      n.ip = value;
    } else if (key == "bandwidth") {
      n.config.bandwidth = BandwidthClass{number<std::uint64_t>(value, line, key)};
    } else if (key == "location") {
      auto loc = UtmLocation::parse(value);
      if (!loc) fail(line, "location must be \"<northing> <easting> <zone>\"");
      n.config.location = *loc;
    } else if (key == "id") {
      auto id = NodeId::parse(value);
      if (!id) fail(line, "id must be 64 lowercase hex characters");
      n.config.id = *id;
    } else if (key == "keep_alive") {
      n.config.keep_alive_ms = number<std::int64_t>(value, line, key);
    } else if (key == "update_interval") {
      n.config.update_interval_ms = number<std::int64_t>(value, line, key);
    } else if (key == "peers_requested") {
      n.config.peers_requested = number<std::int64_t>(value, line, key);
    } else if (key == "interval") {
      n.generator.interval_ms = number<std::int64_t>(value, line, key);
    } else if (key == "temp") {
      n.generator.temperature = tenths(value, line, key);
    } else if (key == "rh") {
      n.generator.humidity = tenths(value, line, key);
    } else if (key == "pressure") {
      n.generator.pressure = tenths(value, line, key);
    } else if (key == "wind_dir") {
      n.generator.wind_direction = number<std::int64_t>(value, line, key);
    } else if (key == "wind_speed") {
      n.generator.wind_speed = tenths(value, line, key);
    } else if (key == "dir_lull") {
      n.generator.direction_lull = number<std::int64_t>(value, line, key);
    } else if (key == "dir_gust") {
      n.generator.direction_gust = number<std::int64_t>(value, line, key);
    } else if (key == "speed_lull") {
      n.generator.speed_lull = tenths(value, line, key);
    } else if (key == "speed_gust") {
      n.generator.speed_gust = tenths(value, line, key);
    } else if (key == "rain") {
      double p = 0;
      std::istringstream ps(value);
      if (!(ps >> p) || p < 0 || p > 1) fail(line, "rain must be a probability in [0,1]");
      n.generator.precipitation_probability = p;
    } else if (key == "walk") {
      if (value == "0") {
        auto& g = n.generator;
        g.temperature_step = g.humidity_step = g.pressure_step = 0;
        g.wind_direction_step = g.wind_speed_step = 0;
      } else if (value != "1") {
        fail(line, "walk must be 0 or 1");
      }
    } else {
      fail(line, "unknown node option '" + key + "'");
    }
  }
  n.generator.seed = seed;
  if (n.generator.interval_ms < 1000) fail(line, "interval must be at least 1000 ms");
  if (n.config.id.hex().empty()) {
    n.config.id = NodeId{sha256_hex("scenario-node:" + n.name + ":" + std::to_string(seed))};
  }
  return n;
}

const std::set<std::string> kVerbs = {"handshake", "discover", "peers", "stream",
                                      "stop",      "alive",    "close", "fetch"};

}  // namespace

Scenario Scenario::parse(std::istream& in) {
  Scenario s;
  s.epoch = *parse_timestamp("2011-07-20T16:51:29Z");
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    auto t = tokenize(text, line);
    if (t.empty()) continue;
    const std::string& kw = t[0];
    if (kw == "epoch") {
      if (t.size() != 2) fail(line, "epoch takes one timestamp");
      auto ts = parse_timestamp(t[1]);
      if (!ts) fail(line, "bad epoch timestamp");
      s.epoch = *ts;
    } else if (kw == "until") {
      if (t.size() != 2) fail(line, "until takes one time in ms");
      s.until_ms = number<std::int64_t>(t[1], line, "until");
    } else if (kw == "node") {
      ScenarioNode n = parse_node(t, line, s.nodes.size());
      if (s.node(n.name)) fail(line, "duplicate node '" + n.name + "'");
      s.nodes.push_back(std::move(n));
    } else if (kw == "link") {
      if (t.size() < 3) fail(line, "link needs two node names");
      ScenarioLink l{t[1], t[2], {}};
      if (!s.node(l.a) || !s.node(l.b)) fail(line, "link refers to an undeclared node");
      for (const auto& [key, value] : options(t, 3, line)) {
        if (key == "latency_ms") {
          l.spec.latency_ms = number<std::int64_t>(value, line, key);
        } else if (key == "bandwidth") {
          l.spec.bandwidth_bps = number<std::uint64_t>(value, line, key);
        } else if (key == "loss") {
          std::istringstream ls(value);
          if (!(ls >> l.spec.loss)) fail(line, "loss must be a fraction");
        } else {
          fail(line, "unknown link option '" + key + "'");
        }
      }
      try {
        check_link(l.spec);
      } catch (const ArgumentError& e) {
        fail(line, e.what());
      }
      s.links.push_back(std::move(l));
    } else if (kw == "at") {
      if (t.size() < 4) fail(line, "expected: at <t_ms> <node> <command> [args]");
      ScenarioCommand c;
      c.at_ms = number<std::int64_t>(t[1], line, "time");
      if (c.at_ms < 0) fail(line, "time must be >= 0");
      c.node = t[2];
      c.verb = t[3];
      c.args.assign(t.begin() + 4, t.end());
      c.line = line;
      if (!s.node(c.node)) fail(line, "unknown node '" + c.node + "'");
      if (!kVerbs.count(c.verb)) fail(line, "unknown command '" + c.verb + "'");
      std::size_t want = c.verb == "fetch" ? 3 : 1;
      if (c.args.size() != want) fail(line, c.verb + " takes " + std::to_string(want) + " argument(s)");
      if (!s.node(c.args[0])) fail(line, "unknown peer '" + c.args[0] + "'");
      if (!s.commands.empty() && c.at_ms < s.commands.back().at_ms) fail(line, "commands must be in time order");
      s.commands.push_back(std::move(c));
    } else {
      fail(line, "unknown directive '" + kw + "'");
    }
  }
  return s;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path);
  return parse(in);
}

const ScenarioNode* Scenario::node(const std::string& name) const {
  for (const auto& n : nodes) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

std::string format_trace(const TraceEvent& e) {
  std::ostringstream os;
  os << std::setw(8) << e.time_ms << " ms  ";
  switch (e.kind) {
    case TraceKind::kSend:
      os << "send " << e.node << " -> " << e.peer << " conn=" << e.connection << " type=" << e.type << ' '
         << code_name(static_cast<ProtocolCode>(e.type)) << " bytes=" << e.bytes << " tx_ms=" << e.tx_ms;
      if (e.arrival_ms >= 0) {
        os << " arrive=" << e.arrival_ms;
      } else {
        os << " lost";
      }
      break;
    case TraceKind::kRecv:
      os << "recv " << e.node << " <- " << e.peer << " conn=" << e.connection << " type=" << e.type << ' '
         << code_name(static_cast<ProtocolCode>(e.type)) << " bytes=" << e.bytes;
      break;
    case TraceKind::kApp:
      os << "app  " << e.node << " <- " << e.peer << " conn=" << e.connection << ' ' << e.detail;
      break;
    case TraceKind::kClose:
      os << "close " << e.node << " -- " << e.peer << " conn=" << e.connection << ' ' << e.detail;
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

struct Simulation::Node {
  const ScenarioNode* spec;
  Engine engine;
  SampleGenerator generator;
  std::map<ConnectionId, Session> sessions;
  std::map<ConnectionId, std::string> peer_names;
  std::int64_t next_sample_ms = 0;

  Node(const ScenarioNode& s)
      : spec(&s), engine(s.config, s.ip, s.generator.seed), generator(s.generator) {}

  std::vector<Session*> open_sessions() {
    std::vector<Session*> out;
    for (auto& [id, session] : sessions) out.push_back(&session);
    return out;
  }
};

Simulation::Simulation(Scenario scenario) : scenario_(std::move(scenario)) {
  for (const auto& l : scenario_.links) net_.add_link(l.a, l.b, l.spec);
  for (const auto& n : scenario_.nodes) {
    auto node = std::make_unique<Node>(n);
    Node* raw = node.get();
    auto& cb = raw->engine.callbacks();
    auto app = [this, raw](const Session& s, std::string detail) {
      TraceEvent e;
      e.time_ms = net_.now();
      e.kind = TraceKind::kApp;
      e.node = raw->spec->name;
      e.peer = raw->peer_names[s.id];
      e.connection = s.id;
      e.detail = std::move(detail);
      trace_.push_back(std::move(e));
    };
    cb.on_service_catalog = [app](const Session& s, const ServiceCatalog& c) {
      app(s, "services " + encode_services(c));
    };
    cb.on_weather_data = [app](const Session& s, const Envelope& m, DataOrigin o) {
      app(s, std::string(o == DataOrigin::kRealTime ? "realtime " : "on-demand ") +
                 format_timestamp(m.meta.timestamp) + ' ' + encode_data(*m.data()));
    };
    cb.on_peer_list = [app](const Session& s, const PeerListing& l) {
      app(s, "peers " + std::to_string(l.entries.size()));
    };
    cb.on_error = [app](const Session& s, ProtocolCode c) {
      app(s, "error " + std::to_string(code_value(c)) + ' ' + std::string(code_name(c)));
    };
    cb.on_status = [app](const Session& s, ProtocolCode c) {
      app(s, "status " + std::to_string(code_value(c)) + ' ' + std::string(code_name(c)));
    };
    nodes_.emplace(n.name, std::move(node));
  }
}

Simulation::~Simulation() = default;

TimePoint Simulation::clock() const { return TimePoint{scenario_.epoch.time_since_epoch()} + Millis{net_.now()}; }

Simulation::Node& Simulation::node(const std::string& name) {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) throw ScenarioError("unknown node '" + name + "'");
  return *it->second;
}

Engine& Simulation::engine(const std::string& name) { return node(name).engine; }

const Session* Simulation::session(const std::string& name, const std::string& peer) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) return nullptr;
  for (const auto& [id, p] : it->second->peer_names) {
    if (p == peer) return &it->second->sessions.at(id);
  }
  return nullptr;
}

void Simulation::apply(Node& n, Actions actions) {
  for (auto& a : actions) {
    if (auto* send = std::get_if<SendMessage>(&a)) {
      std::string body = encode(send->message);
      ConnectionId conn = send->session;
      if (!net_.is_open(conn)) continue;
      const std::string& peer = n.peer_names.at(conn);
      TraceEvent e;
      e.time_ms = net_.now();
      e.kind = TraceKind::kSend;
      e.node = n.spec->name;
      e.peer = peer;
      e.connection = conn;
      e.type = code_value(send->message.type);
      e.bytes = body.size();
      std::string frame = make_frame(body);
      e.tx_ms = transmission_ms(frame.size(), net_.link(n.spec->name, peer)->bandwidth_bps);
      auto arrival = net_.send(conn, n.spec->name, std::move(frame));
      e.arrival_ms = arrival.value_or(-1);
      trace_.push_back(std::move(e));
    } else if (auto* close = std::get_if<CloseSession>(&a)) {
      ConnectionId conn = close->session;
      trace_.push_back(TraceEvent{net_.now(), TraceKind::kClose, n.spec->name, n.peer_names.at(conn), conn, 0, 0,
                                  0, -1, close->reason});
      net_.close(conn);
      for (auto& [name, other] : nodes_) {
        auto it = other->sessions.find(conn);
        if (it != other->sessions.end()) it->second.state = SessionState::kClosed;
      }
    }
  }
}

void Simulation::deliver(const Delivery& d) {
  Node& n = node(d.to);
  auto it = n.sessions.find(d.connection);
  if (it == n.sessions.end()) return;
  Session& s = it->second;

  FrameReader reader;
  reader.feed(d.bytes);
  while (auto body = reader.next()) {
    TraceEvent e;
    e.time_ms = net_.now();
    e.kind = TraceKind::kRecv;
    e.node = d.to;
    e.peer = d.from;
    e.connection = d.connection;
    e.bytes = body->size();
    try {
      Envelope m = decode(*body);
      e.type = code_value(m.type);
      trace_.push_back(std::move(e));
      apply(n, n.engine.handle_message(s, m, clock()));
    } catch (const DecodeError& err) {
      e.detail = err.what();
      trace_.push_back(std::move(e));
      apply(n, n.engine.handle_undecodable(s, clock()));
    }
  }
}

void Simulation::execute(const ScenarioCommand& c) {
  Node& n = node(c.node);
  const std::string& peer = c.args[0];
  auto where = [&] { return "scenario line " + std::to_string(c.line) + ": "; };
  try {
    if (c.verb == "handshake") {
      ConnectionId conn = net_.connect(c.node, peer);
      Node& other = node(peer);
      n.sessions.emplace(conn, n.engine.open_session(conn, clock()));
      n.peer_names[conn] = peer;
      other.sessions.emplace(conn, other.engine.open_session(conn, clock()));
      other.peer_names[conn] = c.node;
      apply(n, n.engine.initiate_handshake(n.sessions.at(conn), clock()));
      return;
    }
    Session* s = nullptr;
    for (auto& [conn, name] : n.peer_names) {
      if (name == peer && n.sessions.at(conn).state != SessionState::kClosed) s = &n.sessions.at(conn);
    }
    if (!s) throw ScenarioError(where() + c.node + " has no open session with " + peer);
    TimePoint now = clock();
    if (c.verb == "discover") {
      apply(n, n.engine.request_service_catalog(*s, now));
    } else if (c.verb == "peers") {
      apply(n, n.engine.request_peer_list(*s, now));
    } else if (c.verb == "stream") {
      apply(n, n.engine.request_realtime(*s, now));
    } else if (c.verb == "stop") {
      apply(n, n.engine.stop_realtime(*s, now));
    } else if (c.verb == "alive") {
      apply(n, n.engine.verify_alive(*s, now));
    } else if (c.verb == "close") {
      apply(n, {CloseSession{s->id, "closed by script"}});
    } else if (c.verb == "fetch") {
      Timestamp at;
      if (!c.args[1].empty() && c.args[1][0] == '+') {
        std::int64_t ms = std::stoll(c.args[1].substr(1));
        at = to_timestamp(TimePoint{scenario_.epoch.time_since_epoch()} + Millis{ms});
      } else if (auto ts = parse_timestamp(c.args[1])) {
        at = *ts;
      } else {
        throw ScenarioError(where() + "bad fetch timestamp '" + c.args[1] + "'");
      }
      std::vector<Service> services;
      std::stringstream ss(c.args[2]);
      std::string item;
      while (std::getline(ss, item, ',')) {
        auto svc = parse_service(item);
        if (!svc) throw ScenarioError(where() + "unknown service '" + item + "'");
        services.push_back(*svc);
      }
      apply(n, n.engine.request_on_demand(*s, services, at, now));
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(where() + e.what());
  }
}

const std::vector<TraceEvent>& Simulation::run() {
  std::int64_t until = scenario_.until_ms.value_or(
      scenario_.commands.empty() ? 1000 : scenario_.commands.back().at_ms + 1000);
  std::size_t next_cmd = 0;
  std::int64_t next_sweep = 0;
  std::int64_t t = 0;

  while (true) {
    for (const auto& d : net_.advance(t - net_.now())) deliver(d);

    for (auto& [name, n] : nodes_) {
      if (n->next_sample_ms != t) continue;
      NormalizedSample sample = n->generator.next_sample(to_timestamp(clock()));
      auto sessions = n->open_sessions();
      apply(*n, n->engine.ingest_sample(sample, sessions, clock()));
      n->next_sample_ms += n->generator.config().interval_ms;
    }
    if (t == next_sweep) {
      for (auto& [name, n] : nodes_) {
        auto sessions = n->open_sessions();
        apply(*n, n->engine.keep_alive_sweep(sessions, clock()));
        n->engine.peers().expire_idle(clock());
      }
      next_sweep += 1000;
    }
    while (next_cmd < scenario_.commands.size() && scenario_.commands[next_cmd].at_ms == t) {
      execute(scenario_.commands[next_cmd++]);
    }

    std::int64_t next = next_sweep;
    if (auto d = net_.next_delivery_time()) next = std::min(next, *d);
    for (auto& [name, n] : nodes_) next = std::min(next, n->next_sample_ms);
    if (next_cmd < scenario_.commands.size()) next = std::min(next, scenario_.commands[next_cmd].at_ms);
    if (next > until) break;
    t = next;
  }
  return trace_;
}

}  // namespace owp
