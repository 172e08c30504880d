#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "openweather/identity.hpp"
#include "openweather/location.hpp"
#include "openweather/timestamp.hpp"
#include "openweather/weather.hpp"

namespace owp {

// Bandwidth advertised in MetaInfo. Classes 0..6 index a fixed table; any
// larger value is a literal bit rate.
struct BandwidthClass {
  std::uint64_t raw = 0;
  friend bool operator==(const BandwidthClass&, const BandwidthClass&) = default;
};

std::uint64_t bandwidth_to_bps(BandwidthClass bw);

struct ServiceFlags {
  bool realtime = false;   // "R"
  bool on_demand = false;  // "O"
  friend bool operator==(const ServiceFlags&, const ServiceFlags&) = default;
};

// "R", "O" or "RO"; empty string for no flags (invalid on the wire).
std::string flags_text(ServiceFlags f);
std::optional<ServiceFlags> parse_flags(std::string_view text);

struct ServiceCatalog {
  std::map<Service, ServiceFlags> services;

  // Every known service with "RO".
  static ServiceCatalog all();
  friend bool operator==(const ServiceCatalog&, const ServiceCatalog&) = default;
};

struct PeerEntry {
  std::string peer_ip;
  std::int64_t port = 0;
  BandwidthClass bandwidth;
  friend bool operator==(const PeerEntry&, const PeerEntry&) = default;
};

// Peer-list payload; keyed by node ID so duplicates cannot occur.
struct PeerListing {
  std::map<NodeId, PeerEntry> entries;
  friend bool operator==(const PeerListing&, const PeerListing&) = default;
};

inline constexpr std::size_t kDefaultPeerCapacity = 1024;
inline constexpr int kMaxPeersRequested = 100;

struct PeerRecord {
  NodeId id;
  std::string address;
  std::uint16_t port = 0;
  BandwidthClass bandwidth;
  std::optional<UtmLocation> location;
  TimePoint last_rx{};
  Millis keep_alive{120000};
  // Statically configured peers are never expired.
  bool super_node = false;

  friend bool operator==(const PeerRecord&, const PeerRecord&) = default;
};

class PeerTable {
 public:
  explicit PeerTable(std::size_t capacity = kDefaultPeerCapacity) : capacity_(capacity) {}

  // Inserts or merges by node ID; last_rx only moves forward. Throws
  // CapacityError when a new ID would exceed capacity.
  const PeerRecord& upsert(const PeerRecord& record);

  // Removes and returns every non-super peer with last_rx + keep_alive < now.
  std::vector<NodeId> expire_idle(TimePoint now);

  bool erase(const NodeId& id) { return peers_.erase(id) > 0; }
  const PeerRecord* find(const NodeId& id) const;
  std::size_t size() const { return peers_.size(); }
  bool empty() const { return peers_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const std::map<NodeId, PeerRecord>& records() const { return peers_; }

 private:
  std::size_t capacity_;
  std::map<NodeId, PeerRecord> peers_;
};

// Extension point for ranked selection (bandwidth, latency, UTM distance).
// When set, candidates are reordered and the first n are taken instead of a
// uniform sample.
using PeerRanker = std::function<void(std::vector<const PeerRecord*>& candidates)>;

struct SelectOptions {
  std::optional<NodeId> exclude;
  PeerRanker ranker;
};

// Uniform sample without replacement of min(n, size) peers; n is clamped
// to [1, 100]. Deterministic for a given engine state.
PeerListing select_peers(const PeerTable& table, int n, std::mt19937_64& rng,
                         const SelectOptions& options = {});

// Super-node bootstrap file: "<node-id-hex> <ip> <port> <bandwidth-class>"
// per line; blank lines and '#' comments are skipped.
std::vector<PeerRecord> load_bootstrap(std::istream& in, TimePoint now);

}  // namespace owp
