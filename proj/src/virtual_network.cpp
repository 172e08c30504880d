#include "openweather/virtual_network.hpp"

#include <algorithm>

#include "openweather/errors.hpp"

namespace owp {

void check_link(const LinkSpec& link) {
  if (link.latency_ms < 0) throw ArgumentError("link latency must be >= 0");
  if (link.bandwidth_bps == 0) throw ArgumentError("link bandwidth must be > 0");
  if (!(link.loss >= 0.0 && link.loss <= 1.0)) throw ArgumentError("link loss must be within [0,1]");
}

std::int64_t transmission_ms(std::size_t bytes, std::uint64_t bandwidth_bps) {
  std::uint64_t bits_ms = static_cast<std::uint64_t>(bytes) * 8 * 1000;
  return static_cast<std::int64_t>(bits_ms / bandwidth_bps + (bits_ms % bandwidth_bps != 0 ? 1 : 0));
}

std::pair<std::string, std::string> VirtualNetwork::ordered(const std::string& a, const std::string& b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

void VirtualNetwork::add_link(const std::string& a, const std::string& b, const LinkSpec& spec) {
  check_link(spec);
  if (a == b) throw ArgumentError("link endpoints must differ: " + a);
  links_[ordered(a, b)] = Link{spec, {}};
}

const LinkSpec* VirtualNetwork::link(const std::string& a, const std::string& b) const {
  auto it = links_.find(ordered(a, b));
  return it == links_.end() ? nullptr : &it->second.spec;
}

ConnectionId VirtualNetwork::connect(const std::string& from, const std::string& to) {
  if (!link(from, to)) throw ArgumentError("no link between " + from + " and " + to);
  ConnectionId id = next_connection_++;
  connections_[id] = Connection{from, to, true};
  return id;
}

void VirtualNetwork::close(ConnectionId id) {
  auto it = connections_.find(id);
  if (it != connections_.end()) it->second.open = false;
}

bool VirtualNetwork::is_open(ConnectionId id) const {
  auto it = connections_.find(id);
  return it != connections_.end() && it->second.open;
}

std::string VirtualNetwork::peer_of(ConnectionId id, const std::string& endpoint) const {
  auto it = connections_.find(id);
  if (it == connections_.end()) throw TransportError("unknown connection " + std::to_string(id));
  if (it->second.a == endpoint) return it->second.b;
  if (it->second.b == endpoint) return it->second.a;
  throw TransportError(endpoint + " is not an endpoint of connection " + std::to_string(id));
}

std::optional<std::int64_t> VirtualNetwork::send(ConnectionId id, const std::string& from, std::string bytes) {
  if (!is_open(id)) throw TransportError("send on closed connection " + std::to_string(id));
  std::string to = peer_of(id, from);
  Link& l = links_.at(ordered(from, to));
  Direction& dir = l.directions[from];
  std::int64_t start = std::max(now_, dir.busy_until);
  dir.busy_until = start + transmission_ms(bytes.size(), l.spec.bandwidth_bps);
  std::int64_t arrival = dir.busy_until + l.spec.latency_ms;

  if (l.spec.loss > 0.0) {
    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < l.spec.loss) return std::nullopt;
  }
  std::uint64_t seq = next_sequence_++;
  pending_.emplace(Key{arrival, id, seq}, Delivery{arrival, id, seq, from, std::move(to), std::move(bytes)});
  return arrival;
}

std::vector<Delivery> VirtualNetwork::advance(std::int64_t delta_ms) {
  if (delta_ms < 0) throw ArgumentError("cannot advance the clock backwards");
  now_ += delta_ms;
  std::vector<Delivery> out;
  while (!pending_.empty() && std::get<0>(pending_.begin()->first) <= now_) {
    auto node = pending_.extract(pending_.begin());
    if (is_open(node.mapped().connection)) out.push_back(std::move(node.mapped()));
  }
  return out;
}

std::optional<std::int64_t> VirtualNetwork::next_delivery_time() const {
  if (pending_.empty()) return std::nullopt;
  return std::get<0>(pending_.begin()->first);
}

}  // namespace owp
