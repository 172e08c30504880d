#include "openweather/message.hpp"

namespace owp {

bool is_registered_code(int v) {
  switch (v) {
    case 100: case 101: case 102: case 103: case 104: case 105: case 106: case 107:
    case 200: case 201: case 202:
    case 300: case 301:
    case 500: case 501:
      return true;
    default:
      return v >= 600 && v <= 699;
  }
}

std::vector<ProtocolCode> registered_codes() {
  std::vector<ProtocolCode> out;
  for (int v = 1; v <= 699; ++v) {
    if (is_registered_code(v)) out.push_back(static_cast<ProtocolCode>(v));
  }
  return out;
}

std::string_view code_name(ProtocolCode c) {
  switch (c) {
    case ProtocolCode::kHandshake: return "HANDSHAKE";
    case ProtocolCode::kHandshakeStatus: return "HANDSHAKE-S";
    case ProtocolCode::kServicesAvailable: return "SERVICES-AVAILABLE";
    case ProtocolCode::kServicesAvailableReply: return "SERVICES-AVAILABLE-R";
    case ProtocolCode::kServicesAvailableStatus: return "SERVICES-AVAILABLE-S";
    case ProtocolCode::kListPeersReply: return "LIST-PEERS-R";
    case ProtocolCode::kListPeersStatus: return "LIST-PEERS-S";
    case ProtocolCode::kListPeers: return "LIST-PEERS";
    case ProtocolCode::kRealTimeData: return "REAL-TIME-DATA";
    case ProtocolCode::kOnDemandData: return "ON-DEMAND-DATA";
    case ProtocolCode::kStopRealTimeData: return "STOP-REAL-TIME-DATA";
    case ProtocolCode::kRealTimeDataReply: return "REAL-TIME-DATA-R";
    case ProtocolCode::kOnDemandDataReply: return "ON-DEMAND-DATA-R";
    case ProtocolCode::kRealTimeDataStatus: return "REAL-TIME-DATA-S";
    case ProtocolCode::kOnDemandDataStatus: return "ON-DEMAND-DATA-S";
    case ProtocolCode::kErrorUnexpected: return "ERROR-UNEXPECTED";
    case ProtocolCode::kErrorSampleNotFound: return "ERROR-SAMPLE-NOT-FOUND";
    case ProtocolCode::kErrorServiceUnavailable: return "ERROR-SERVICE-UNAVAILABLE";
  }
  return is_error_status(c) ? "ERROR" : "UNKNOWN";
}

bool valid_version(std::string_view v) {
  constexpr std::string_view kPrefix = "OpenWeather/";
  if (v.substr(0, kPrefix.size()) != kPrefix) return false;
  v.remove_prefix(kPrefix.size());
  auto dot = v.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == v.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == dot) continue;
    if (v[i] < '0' || v[i] > '9') return false;
  }
  return true;
}

PayloadKind Envelope::payload_kind() const {
  switch (payload.index()) {
    case 0: return PayloadKind::kNone;
    case 1: return PayloadKind::kData;
    case 2:
      return std::holds_alternative<ServiceCatalog>(std::get<InfoPayload>(payload))
                 ? PayloadKind::kServices
                 : PayloadKind::kPeers;
    default: return PayloadKind::kRetrieve;
  }
}

const ServiceCatalog* Envelope::services() const {
  auto* info = std::get_if<InfoPayload>(&payload);
  return info ? std::get_if<ServiceCatalog>(info) : nullptr;
}

const PeerListing* Envelope::peers() const {
  auto* info = std::get_if<InfoPayload>(&payload);
  return info ? std::get_if<PeerListing>(info) : nullptr;
}

PayloadKind expected_payload(ProtocolCode code) {
  switch (code) {
    case ProtocolCode::kServicesAvailableReply: return PayloadKind::kServices;
    case ProtocolCode::kListPeersReply: return PayloadKind::kPeers;
    case ProtocolCode::kOnDemandData: return PayloadKind::kRetrieve;
    case ProtocolCode::kRealTimeDataReply:
    case ProtocolCode::kOnDemandDataReply: return PayloadKind::kData;
    default: return PayloadKind::kNone;
  }
}

std::string_view payload_kind_name(PayloadKind k) {
  switch (k) {
    case PayloadKind::kNone: return "none";
    case PayloadKind::kData: return "Data";
    case PayloadKind::kServices: return "Info.Services";
    case PayloadKind::kPeers: return "Info.Peers";
    case PayloadKind::kRetrieve: return "Retrieve";
  }
  return "?";
}

}  // namespace owp
