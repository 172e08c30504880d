#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace owp {

struct LinkSpec {
  std::int64_t latency_ms = 0;
  std::uint64_t bandwidth_bps = 100'000'000;
  double loss = 0.0;
};

// Throws ArgumentError on a negative latency, zero bandwidth or loss outside [0,1].
void check_link(const LinkSpec& link);

// Serialization time of `bytes` on the link, rounded up to whole ms.
std::int64_t transmission_ms(std::size_t bytes, std::uint64_t bandwidth_bps);

using ConnectionId = std::uint64_t;

struct Delivery {
  std::int64_t time_ms = 0;
  ConnectionId connection = 0;
  std::uint64_t sequence = 0;
  std::string from;
  std::string to;
  std::string bytes;
};

// Deterministic event-driven network. Each link direction serializes one
// frame at a time; a frame arrives latency_ms after its last bit is sent.
class VirtualNetwork {
 public:
  explicit VirtualNetwork(std::uint64_t seed = 0) : rng_(seed) {}

  void add_link(const std::string& a, const std::string& b, const LinkSpec& spec);
  const LinkSpec* link(const std::string& a, const std::string& b) const;

  // Throws ArgumentError when no link joins the two endpoints.
  ConnectionId connect(const std::string& from, const std::string& to);
  void close(ConnectionId id);
  bool is_open(ConnectionId id) const;
  std::string peer_of(ConnectionId id, const std::string& endpoint) const;

  // Schedules delivery to the other endpoint and returns its time, or
  // nullopt when the frame is lost. Throws TransportError on a closed
  // connection or an endpoint that is not part of it.
  std::optional<std::int64_t> send(ConnectionId id, const std::string& from, std::string bytes);

  // Moves the clock forward and returns every delivery due by then, ordered
  // by (time, connection, sequence). Frames for closed connections are dropped.
  std::vector<Delivery> advance(std::int64_t delta_ms);

  std::int64_t now() const { return now_; }
  std::optional<std::int64_t> next_delivery_time() const;
  std::size_t in_flight() const { return pending_.size(); }

 private:
  struct Direction {
    std::int64_t busy_until = 0;
  };
  struct Link {
    LinkSpec spec;
    std::map<std::string, Direction> directions;  // keyed by sender
  };
  struct Connection {
    std::string a, b;
    bool open = true;
  };
  using Key = std::tuple<std::int64_t, ConnectionId, std::uint64_t>;

  static std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b);

  std::int64_t now_ = 0;
  std::uint64_t next_sequence_ = 0;
  ConnectionId next_connection_ = 1;
  std::map<std::pair<std::string, std::string>, Link> links_;
  std::map<ConnectionId, Connection> connections_;
  std::map<Key, Delivery> pending_;
  std::mt19937_64 rng_;
};

}  // namespace owp
