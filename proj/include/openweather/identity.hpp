#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace owp {

// 64 lowercase hex characters (a SHA-256 digest). The wrapper itself does not
// enforce the alphabet so that decoded-but-invalid headers can be reported by
// codec::validate instead of being rejected during parsing.
class NodeId {
 public:
  NodeId() = default;
  explicit NodeId(std::string hex) : hex_(std::move(hex)) {}

  static std::optional<NodeId> parse(std::string_view hex);

  const std::string& hex() const { return hex_; }
  bool valid() const;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;

 private:
  std::string hex_;
};

// CWOP-style station record.
struct StationDescriptor {
  std::string block;    // 2 digits, WMO block
  std::string station;  // 3 digits, WMO station
  std::string place;
  std::string country;
};

struct OwpUri {
  std::string authority;  // folded country name
  std::string place;      // folded place name
  std::string station;    // block + station

  std::string str() const { return "owp://" + authority + "/" + place + "/" + station; }
  friend bool operator==(const OwpUri&, const OwpUri&) = default;
};

// Throws ArgumentError when the descriptor shape is wrong.
void check_descriptor(const StationDescriptor& d);

// owp://<country>/<place>/<block><station>, lowercased with spaces folded to
// '-'. Throws UriEncodingError if anything outside the RFC 3986 unreserved
// set survives folding.
OwpUri make_owp_uri(const StationDescriptor& d);

// "<block>;<station>;<place>;;<country>", original case preserved. The empty
// field is where the CWOP record carries the ICAO code.
std::string node_id_preimage(const StationDescriptor& d);

NodeId derive_node_id(const StationDescriptor& d);

NodeId random_node_id(std::span<const std::byte, 32> seed);

// Seeds from std::random_device.
NodeId random_node_id();

// Lowercase hex SHA-256 of arbitrary bytes.
std::string sha256_hex(std::span<const std::byte> data);
std::string sha256_hex(std::string_view text);

}  // namespace owp
