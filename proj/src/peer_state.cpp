#include "openweather/peer_state.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <sstream>

#include "openweather/errors.hpp"
#include "openweather/net_address.hpp"

namespace owp {

std::uint64_t bandwidth_to_bps(BandwidthClass bw) {
  static constexpr std::array<std::uint64_t, 7> kTable = {
      56'000, 128'000, 256'000, 512'000, 1'000'000, 10'000'000, 100'000'000};
  return bw.raw < kTable.size() ? kTable[bw.raw] : bw.raw;
}

std::string flags_text(ServiceFlags f) {
  std::string out;
  if (f.realtime) out += 'R';
  if (f.on_demand) out += 'O';
  return out;
}

std::optional<ServiceFlags> parse_flags(std::string_view text) {
  if (text == "R") return ServiceFlags{true, false};
  if (text == "O") return ServiceFlags{false, true};
  if (text == "RO") return ServiceFlags{true, true};
  return std::nullopt;
}

ServiceCatalog ServiceCatalog::all() {
  ServiceCatalog c;
  for (Service s : kAllServices) c.services[s] = ServiceFlags{true, true};
  return c;
}

const PeerRecord& PeerTable::upsert(const PeerRecord& record) {
  auto it = peers_.find(record.id);
  if (it == peers_.end()) {
    if (peers_.size() >= capacity_) {
      throw CapacityError("peer table full (" + std::to_string(capacity_) + "), dropping " +
                          record.id.hex());
    }
    return peers_.emplace(record.id, record).first->second;
  }
  PeerRecord& existing = it->second;
  existing.address = record.address;
  existing.port = record.port;
  existing.bandwidth = record.bandwidth;
  existing.keep_alive = record.keep_alive;
  if (record.location) existing.location = record.location;
  existing.last_rx = std::max(existing.last_rx, record.last_rx);
  existing.super_node = existing.super_node || record.super_node;
  return existing;
}

std::vector<NodeId> PeerTable::expire_idle(TimePoint now) {
  std::vector<NodeId> expired;
  for (auto it = peers_.begin(); it != peers_.end();) {
    const PeerRecord& p = it->second;
    if (!p.super_node && p.last_rx + p.keep_alive < now) {
      expired.push_back(it->first);
      it = peers_.erase(it);
    } else {
      ++it;
    }
  }
  return expired;
}

const PeerRecord* PeerTable::find(const NodeId& id) const {
  auto it = peers_.find(id);
  return it == peers_.end() ? nullptr : &it->second;
}

namespace {

// Unbiased draw in [0, bound) that only depends on the mt19937_64 output
// sequence, so selections are identical across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

PeerListing select_peers(const PeerTable& table, int n, std::mt19937_64& rng,
                         const SelectOptions& options) {
  n = std::clamp(n, 1, kMaxPeersRequested);
  std::vector<const PeerRecord*> candidates;
  candidates.reserve(table.size());
  for (const auto& [id, rec] : table.records()) {
    if (options.exclude && id == *options.exclude) continue;
    candidates.push_back(&rec);
  }
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n), candidates.size());

  if (options.ranker) {
    options.ranker(candidates);
  } else {
    // Partial Fisher-Yates: the first `take` slots become the sample.
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t j = i + static_cast<std::size_t>(bounded(rng, candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
    }
  }

  PeerListing listing;
  for (std::size_t i = 0; i < take && i < candidates.size(); ++i) {
    const PeerRecord& p = *candidates[i];
    listing.entries.emplace(p.id, PeerEntry{p.address, p.port, p.bandwidth});
  }
  return listing;
}

std::vector<PeerRecord> load_bootstrap(std::istream& in, TimePoint now) {
  std::vector<PeerRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string id, ip;
    long long port = 0;
    long long bw = 0;
    if (!(fields >> id)) continue;
    std::string extra;
    if (!(fields >> ip >> port >> bw) || (fields >> extra)) {
      throw ArgumentError("bootstrap line " + std::to_string(lineno) +
                          ": expected '<node-id> <ip> <port> <bandwidth-class>'");
    }
    auto node = NodeId::parse(id);
    if (!node) throw ArgumentError("bootstrap line " + std::to_string(lineno) + ": bad node id");
    if (!valid_ip_address(ip)) {
      throw ArgumentError("bootstrap line " + std::to_string(lineno) + ": bad address '" + ip + "'");
    }
    if (port < 1 || port > 65535 || bw < 0) {
      throw ArgumentError("bootstrap line " + std::to_string(lineno) + ": port or bandwidth out of range");
    }
    PeerRecord rec;
    rec.id = *node;
    rec.address = ip;
    rec.port = static_cast<std::uint16_t>(port);
    rec.bandwidth = BandwidthClass{static_cast<std::uint64_t>(bw)};
    rec.last_rx = now;
    rec.super_node = true;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace owp
