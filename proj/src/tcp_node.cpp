#include "openweather/tcp_node.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "openweather/codec.hpp"
#include "openweather/errors.hpp"

namespace owp {

namespace {

std::string os_error(const std::string& what) { return what + ": " + std::strerror(errno); }

void set_nonblocking(int fd) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) throw TransportError(os_error("fcntl"));
}

std::string address_text(const sockaddr_storage& ss) {
  char buf[INET6_ADDRSTRLEN] = {};
  if (ss.ss_family == AF_INET) {
    ::inet_ntop(AF_INET, &reinterpret_cast<const sockaddr_in&>(ss).sin_addr, buf, sizeof(buf));
  } else if (ss.ss_family == AF_INET6) {
    const auto& a6 = reinterpret_cast<const sockaddr_in6&>(ss);
    if (IN6_IS_ADDR_V4MAPPED(&a6.sin6_addr)) {
      ::inet_ntop(AF_INET, &a6.sin6_addr.s6_addr[12], buf, sizeof(buf));
    } else {
      ::inet_ntop(AF_INET6, &a6.sin6_addr, buf, sizeof(buf));
    }
  }
  return buf;
}

std::string local_ip(int fd) {
  sockaddr_storage ss{};
  socklen_t len = sizeof(ss);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return "127.0.0.1";
  return address_text(ss);
}

std::string remote_ip(int fd) {
  sockaddr_storage ss{};
  socklen_t len = sizeof(ss);
  if (::getpeername(fd, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return "?";
  return address_text(ss);
}

std::string describe(const Envelope& m, std::size_t bytes) {
  return "type=" + std::to_string(code_value(m.type)) + " " + std::string(code_name(m.type)) +
         " bytes=" + std::to_string(bytes);
}

}  // namespace

struct TcpNode::Connection {
  int fd = -1;
  Session session;
  std::string local_ip;
  std::string remote_ip;
  FrameReader reader;
  std::string out;
  bool closing = false;

  ~Connection() {
    if (fd >= 0) ::close(fd);
  }
};

TcpNode::TcpNode(TcpNodeOptions options)
    : options_(std::move(options)), engine_(options_.config, options_.advertised_ip, options_.seed) {
  if (options_.generator) generator_.emplace(*options_.generator);
  for (const auto& p : options_.bootstrap) {
    try {
      engine_.peers().upsert(p);
    } catch (const CapacityError&) {
      break;
    }
  }
  if (!options_.listen) return;

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw TransportError(os_error("socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options_.config.listen_port);
  if (::inet_pton(AF_INET, options_.bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw TransportError("bad bind address " + options_.bind_address);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 16) != 0) {
    std::string msg = os_error("cannot listen on " + options_.bind_address + ":" +
                               std::to_string(options_.config.listen_port));
    ::close(listen_fd_);
    throw TransportError(msg);
  }
  set_nonblocking(listen_fd_);
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  // Advertise the ephemeral port actually bound.
  if (options_.config.listen_port == 0) engine_.set_listen_port(port_);
}

TcpNode::~TcpNode() {
  connections_.clear();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpNode::log(const std::string& line) {
  if (on_log) on_log(line);
}

void TcpNode::use_address(const Connection& c) {
  engine_.set_local_address(options_.advertised_ip.empty() ? c.local_ip : options_.advertised_ip);
}

SessionId TcpNode::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));

  int fd = -1;
  std::string last = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last = os_error("socket");
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last = os_error("connect to " + host + ":" + std::to_string(port));
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError(last);

  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  set_nonblocking(fd);
  auto c = std::make_unique<Connection>();
  c->fd = fd;
  SessionId id = next_id_++;
  c->session = engine_.open_session(id, system_now());
  c->local_ip = local_ip(fd);
  c->remote_ip = remote_ip(fd);
  connections_.emplace(id, std::move(c));
  log("connected session=" + std::to_string(id) + " to " + host + ":" + std::to_string(port));
  return id;
}

const Session* TcpNode::session(SessionId id) const {
  auto it = connections_.find(id);
  return it == connections_.end() ? nullptr : &it->second->session;
}

std::vector<SessionId> TcpNode::session_ids() const {
  std::vector<SessionId> out;
  for (const auto& [id, c] : connections_) out.push_back(id);
  return out;
}

void TcpNode::perform(SessionId id, const std::function<Actions(Engine&, Session&, TimePoint)>& op) {
  auto it = connections_.find(id);
  if (it == connections_.end()) throw TransportError("no such session " + std::to_string(id));
  use_address(*it->second);
  apply(op(engine_, it->second->session, system_now()));
}

void TcpNode::apply(Actions actions) {
  for (auto& a : actions) {
    if (auto* send = std::get_if<SendMessage>(&a)) {
      auto it = connections_.find(send->session);
      if (it == connections_.end() || it->second->closing) continue;
      std::string body = encode(send->message);
      log("send session=" + std::to_string(send->session) + " " + describe(send->message, body.size()));
      it->second->out += make_frame(body);
      flush(*it->second);
    } else if (auto* close = std::get_if<CloseSession>(&a)) {
      auto it = connections_.find(close->session);
      if (it != connections_.end()) it->second->closing = true;
      log("close session=" + std::to_string(close->session) + " " + close->reason);
    }
  }
  for (auto it = connections_.begin(); it != connections_.end();) {
    Connection& c = *it->second;
    if (c.closing && c.out.empty()) {
      c.session.state = SessionState::kClosed;
      it = connections_.erase(it);
    } else {
      ++it;
    }
  }
}

void TcpNode::flush(Connection& c) {
  while (!c.out.empty()) {
    ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
    if (n > 0) {
      c.out.erase(0, static_cast<std::size_t>(n));
    } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
      return;
    } else {
      c.out.clear();
      c.closing = true;
      return;
    }
  }
}

void TcpNode::drop(SessionId id, const std::string& reason) {
  auto it = connections_.find(id);
  if (it == connections_.end()) return;
  log("drop session=" + std::to_string(id) + " " + reason);
  connections_.erase(it);
}

void TcpNode::accept_all() {
  while (true) {
    sockaddr_storage ss{};
    socklen_t len = sizeof(ss);
    int fd = ::accept(listen_fd_, reinterpret_cast<sockaddr*>(&ss), &len);
    if (fd < 0) return;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    set_nonblocking(fd);
    auto c = std::make_unique<Connection>();
    c->fd = fd;
    SessionId id = next_id_++;
    c->session = engine_.open_session(id, system_now());
    c->local_ip = local_ip(fd);
    c->remote_ip = address_text(ss);
    log("accepted session=" + std::to_string(id) + " from " + c->remote_ip);
    connections_.emplace(id, std::move(c));
  }
}

void TcpNode::read_from(Connection& c) {
  char buf[8192];
  SessionId id = c.session.id;
  while (true) {
    ssize_t n = ::recv(c.fd, buf, sizeof(buf), 0);
    if (n == 0) {
      drop(id, "peer closed the connection");
      return;
    }
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) break;
      if (errno == EINTR) continue;
      drop(id, os_error("recv"));
      return;
    }
    try {
      c.reader.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    } catch (const FramingError& e) {
      drop(id, e.what());
      return;
    }
  }

  while (true) {
    std::optional<std::string> body;
    try {
      body = c.reader.next();
    } catch (const FramingError& e) {
      drop(id, e.what());
      return;
    }
    if (!body) return;
    auto it = connections_.find(id);
    if (it == connections_.end()) return;
    use_address(c);
    TimePoint now = system_now();
    try {
      Envelope m = decode(*body);
      log("recv session=" + std::to_string(id) + " " + describe(m, body->size()));
      apply(engine_.handle_message(c.session, m, now));
    } catch (const DecodeError& e) {
      log("recv session=" + std::to_string(id) + " undecodable: " + e.what());
      apply(engine_.handle_undecodable(c.session, now));
    }
    if (connections_.find(id) == connections_.end()) return;
  }
}

void TcpNode::ingest(const NormalizedSample& sample) {
  std::vector<Session*> sessions;
  for (auto& [id, c] : connections_) sessions.push_back(&c->session);
  TimePoint now = system_now();
  try {
    apply(engine_.ingest_sample(sample, sessions, now));
  } catch (const OrderingError& e) {
    log(std::string("sample skipped: ") + e.what());
  }
}

void TcpNode::timers(TimePoint now) {
  if (generator_) {
    if (!next_sample_) next_sample_ = now;
    if (now >= *next_sample_) {
      ingest(generator_->next_sample(to_timestamp(now)));
      *next_sample_ += Millis{generator_->config().interval_ms};
      if (*next_sample_ < now) next_sample_ = now + Millis{generator_->config().interval_ms};
    }
  }
  if (!next_sweep_) next_sweep_ = now + options_.sweep_interval;
  if (now >= *next_sweep_) {
    std::vector<Session*> sessions;
    for (auto& [id, c] : connections_) sessions.push_back(&c->session);
    apply(engine_.keep_alive_sweep(sessions, now));
    for (const auto& id : engine_.peers().expire_idle(now)) log("peer expired " + id.hex());
    *next_sweep_ = now + options_.sweep_interval;
  }
}

void TcpNode::poll_once(Millis timeout) {
  timers(system_now());

  std::vector<pollfd> fds;
  std::vector<SessionId> ids;
  if (listen_fd_ >= 0) fds.push_back({listen_fd_, POLLIN, 0});
  for (auto& [id, c] : connections_) {
    short events = POLLIN;
    if (!c->out.empty()) events |= POLLOUT;
    fds.push_back({c->fd, events, 0});
    ids.push_back(id);
  }

  TimePoint now = system_now();
  Millis wait = timeout;
  if (next_sample_) wait = std::min(wait, std::max(Millis{0}, *next_sample_ - now));
  if (next_sweep_) wait = std::min(wait, std::max(Millis{0}, *next_sweep_ - now));
  int rc = ::poll(fds.data(), fds.size(), static_cast<int>(wait.count()));
  if (rc < 0) {
    if (errno == EINTR) return;
    throw TransportError(os_error("poll"));
  }

  std::size_t i = 0;
  if (listen_fd_ >= 0) {
    if (fds[0].revents & POLLIN) accept_all();
    i = 1;
  }
  for (std::size_t k = 0; k < ids.size(); ++k, ++i) {
    auto it = connections_.find(ids[k]);
    if (it == connections_.end()) continue;
    Connection& c = *it->second;
    if (fds[i].revents & POLLOUT) flush(c);
    if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) read_from(c);
  }
  apply({});
}

void TcpNode::run(const std::atomic<bool>& stop) {
  while (!stop.load()) poll_once(Millis{200});
}

// ---------------------------------------------------------------------------

OneShotResult run_oneshot(const NodeConfig& config, const OneShotRequest& request,
                          const std::function<void(const std::string&)>& log) {
  OneShotResult result;
  TcpNodeOptions opts;
  opts.config = config;
  opts.listen = false;
  std::unique_ptr<TcpNode> node;
  SessionId sid = 0;
  try {
    node = std::make_unique<TcpNode>(opts);
    node->on_log = log;
    sid = node->connect(request.host, request.port);
  } catch (const TransportError& e) {
    result.code = ExitCode::kTransport;
    result.error = e.what();
    return result;
  }

  bool done = false;
  std::optional<ProtocolCode> failure;
  int received = 0;
  auto& cb = node->engine().callbacks();
  cb.on_service_catalog = [&](const Session&, const ServiceCatalog& c) {
    result.lines.push_back(encode_services(c));
    done = true;
  };
  cb.on_peer_list = [&](const Session&, const PeerListing& l) {
    result.lines.push_back(encode_peers(l));
    done = true;
  };
  cb.on_weather_data = [&](const Session&, const Envelope& m, DataOrigin) {
    result.lines.push_back(encode_data(*m.data()));
    ++received;
    if (request.command == "fetch" || received >= request.count) done = true;
  };
  cb.on_error = [&](const Session&, ProtocolCode c) {
    result.lines.push_back("status " + std::to_string(code_value(c)) + " " + std::string(code_name(c)));
    failure = c;
    done = true;
  };

  auto deadline = std::chrono::steady_clock::now() + request.timeout;
  auto wait_for = [&](const std::function<bool()>& pred) {
    while (!pred()) {
      if (!node->session(sid)) return false;
      auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
      if (left <= Millis{0}) return false;
      node->poll_once(std::min(left, Millis{100}));
    }
    return true;
  };
  auto lost = [&](ExitCode timeout_code) {
    result.code = node->session(sid) ? timeout_code : ExitCode::kTransport;
    result.error = node->session(sid) ? "timed out waiting for the peer" : "connection closed by peer";
    return result;
  };

  try {
    node->perform(sid, [](Engine& e, Session& s, TimePoint now) { return e.initiate_handshake(s, now); });
    if (!wait_for([&] { return node->session(sid)->established() || failure.has_value(); })) {
      return lost(ExitCode::kTimeout);
    }
    if (failure) {
      result.code = ExitCode::kProtocol;
      return result;
    }
    const Session* s = node->session(sid);
    if (request.command == "handshake") {
      result.lines.push_back("established " + s->remote->id.hex() + " " + s->remote->address + ":" +
                             std::to_string(s->remote->port));
      return result;
    }

    std::function<Actions(Engine&, Session&, TimePoint)> op;
    if (request.command == "discover") {
      op = [](Engine& e, Session& s, TimePoint now) { return e.request_service_catalog(s, now); };
    } else if (request.command == "peers") {
      op = [](Engine& e, Session& s, TimePoint now) { return e.request_peer_list(s, now); };
    } else if (request.command == "stream") {
      op = [](Engine& e, Session& s, TimePoint now) { return e.request_realtime(s, now); };
    } else if (request.command == "fetch") {
      op = [&](Engine& e, Session& s, TimePoint now) {
        return e.request_on_demand(s, request.services, request.at, now);
      };
    } else {
      result.code = ExitCode::kUsage;
      result.error = "unknown command " + request.command;
      return result;
    }
    node->perform(sid, op);
    if (!wait_for([&] { return done; })) return lost(ExitCode::kTimeout);

    if (request.command == "stream" && !failure) {
      node->perform(sid, [](Engine& e, Session& s, TimePoint now) { return e.stop_realtime(s, now); });
      for (int i = 0; i < 5 && node->session(sid); ++i) node->poll_once(Millis{20});
    }
  } catch (const TransportError& e) {
    result.code = ExitCode::kTransport;
    result.error = e.what();
    return result;
  }
  if (failure) result.code = ExitCode::kProtocol;
  return result;
}

}  // namespace owp
