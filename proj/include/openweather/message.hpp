#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "openweather/identity.hpp"
#include "openweather/location.hpp"
#include "openweather/peer_state.hpp"
#include "openweather/timestamp.hpp"
#include "openweather/weather.hpp"

namespace owp {

// Value of the "Type" field.
//
//   1..199   protocol maintenance (requests, retrievals, status)
//   200..299 peer requests
//   300..399 peer retrievals
//   500..599 peer success status
//   600..699 peer error status
//
// 104 is SERVICES-AVAILABLE-S; LIST-PEERS lives at 107 so it does not collide
// with it. 202 stops a real-time stream and is acknowledged with 500.
enum class ProtocolCode : std::uint16_t {
  kHandshake = 100,
  kHandshakeStatus = 101,
  kServicesAvailable = 102,
  kServicesAvailableReply = 103,
  kServicesAvailableStatus = 104,
  kListPeersReply = 105,
  kListPeersStatus = 106,
  kListPeers = 107,
  kRealTimeData = 200,
  kOnDemandData = 201,
  kStopRealTimeData = 202,
  kRealTimeDataReply = 300,
  kOnDemandDataReply = 301,
  kRealTimeDataStatus = 500,
  kOnDemandDataStatus = 501,
  kErrorUnexpected = 600,
  kErrorSampleNotFound = 601,
  kErrorServiceUnavailable = 602,
};

inline constexpr int code_value(ProtocolCode c) { return static_cast<int>(c); }

bool is_registered_code(int value);

// Every registered code in ascending order (600..699 expanded).
std::vector<ProtocolCode> registered_codes();

inline bool is_error_status(ProtocolCode c) {
  return code_value(c) >= 600 && code_value(c) <= 699;
}
inline bool is_success_status(ProtocolCode c) {
  return code_value(c) >= 500 && code_value(c) <= 599;
}

std::string_view code_name(ProtocolCode c);

inline constexpr std::string_view kProtocolVersion = "OpenWeather/1.0";
inline constexpr std::uint16_t kDefaultPort = 62535;
inline constexpr std::int64_t kDefaultKeepAliveMs = 120000;
inline constexpr std::int64_t kDefaultUpdateIntervalMs = 120000;
inline constexpr std::int64_t kDefaultPeersRequested = 20;

// The fixed 10-field header. Numeric fields are kept wide so that decoded
// out-of-range values survive until validate() reports them.
struct MetaInfo {
  NodeId id;
  std::string peer_ip;
  std::int64_t port = kDefaultPort;
  UtmLocation location;
  std::int64_t update_interval_ms = kDefaultUpdateIntervalMs;
  std::int64_t peers_requested = kDefaultPeersRequested;
  std::int64_t keep_alive_ms = kDefaultKeepAliveMs;
  BandwidthClass bandwidth;
  Timestamp timestamp{};
  std::string version{kProtocolVersion};

  friend bool operator==(const MetaInfo&, const MetaInfo&) = default;
};

bool valid_version(std::string_view version);

struct RetrieveRequest {
  std::vector<Service> services;
  Timestamp timestamp{};
  friend bool operator==(const RetrieveRequest&, const RetrieveRequest&) = default;
};

using InfoPayload = std::variant<ServiceCatalog, PeerListing>;

using Payload = std::variant<std::monostate, WeatherData, InfoPayload, RetrieveRequest>;

enum class PayloadKind { kNone, kData, kServices, kPeers, kRetrieve };

struct Envelope {
  ProtocolCode type = ProtocolCode::kHandshake;
  MetaInfo meta;
  Payload payload;

  PayloadKind payload_kind() const;
  const WeatherData* data() const { return std::get_if<WeatherData>(&payload); }
  const ServiceCatalog* services() const;
  const PeerListing* peers() const;
  const RetrieveRequest* retrieve() const { return std::get_if<RetrieveRequest>(&payload); }

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

// The payload a given code must carry.
PayloadKind expected_payload(ProtocolCode code);

std::string_view payload_kind_name(PayloadKind k);

}  // namespace owp
