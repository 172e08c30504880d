#include "openweather/codec.hpp"

#include <charconv>
#include <set>

#include "json.hpp"
#include "openweather/errors.hpp"
#include "openweather/net_address.hpp"

namespace owp {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Canonical writer

void write_canonical(const json& j, std::string& out) {
  if (j.is_object()) {
    if (j.empty()) {
      out += "{ }";
      return;
    }
    out += "{ ";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ", ";
      first = false;
      out += json(it.key()).dump();
      out += " : ";
      write_canonical(it.value(), out);
    }
    out += " }";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[ ]";
      return;
    }
    out += "[ ";
    bool first = true;
    for (const auto& v : j) {
      if (!first) out += ", ";
      first = false;
      write_canonical(v, out);
    }
    out += " ]";
  } else {
    out += j.dump(-1, ' ', false, json::error_handler_t::strict);
  }
}

std::string canonical(const json& j) {
  std::string out;
  write_canonical(j, out);
  return out;
}

json to_json(const MinAveMax& g) {
  return json{{"min", g.min.text()}, {"ave", g.ave.text()}, {"max", g.max.text()}};
}

json to_json(const PrecipitationEvent& e) {
  return json{{"accumulation", e.accumulation.text()},
              {"duration", e.duration.text()},
              {"intensity", e.intensity.text()},
              {"peak", e.peak.text()}};
}

json to_json(const WeatherData& d) {
  json out = json::object();
  if (d.ptu) {
    out["PTU"] = json{{"Air-Temperature", d.ptu->air_temperature.text()},
                      {"Relative-Humidity", d.ptu->relative_humidity.text()},
                      {"Air-Pressure", d.ptu->air_pressure.text()}};
  }
  if (d.wind) {
    out["WIND"] = json{{"Direction", to_json(d.wind->direction)}, {"Speed", to_json(d.wind->speed)}};
  }
  if (d.precipitation) {
    out["PRECIPITATION"] = json{{"Rain", to_json(d.precipitation->rain)},
                                {"Hail", to_json(d.precipitation->hail)}};
  }
  return out;
}

json to_json(const ServiceCatalog& c) {
  json out = json::object();
  for (const auto& [svc, flags] : c.services) out[std::string(service_name(svc))] = flags_text(flags);
  return out;
}

json to_json(const PeerListing& l) {
  json out = json::object();
  for (const auto& [id, e] : l.entries) {
    out[id.hex()] = json{{"Peer-IP", e.peer_ip}, {"Port", e.port}, {"Bandwidth", e.bandwidth.raw}};
  }
  return out;
}

json to_json(const RetrieveRequest& r) {
  json d = json::array();
  for (Service s : r.services) d.push_back(std::string(service_name(s)));
  return json{{"D", d}, {"Timestamp", format_timestamp(r.timestamp)}};
}

json to_json(const MetaInfo& m) {
  return json{{"Bandwidth", m.bandwidth.raw},
              {"ID", m.id.hex()},
              {"Keep-Alive", m.keep_alive_ms},
              {"Location", m.location.str()},
              {"Peer-IP", m.peer_ip},
              {"Peers-Requested", m.peers_requested},
              {"Port", m.port},
              {"Timestamp", format_timestamp(m.timestamp)},
              {"Update-Interval", m.update_interval_ms},
              {"Version", m.version}};
}

// Key and JSON value of the payload, or nothing.
std::optional<std::pair<std::string, json>> payload_json(const Envelope& m) {
  switch (m.payload_kind()) {
    case PayloadKind::kNone:
      return std::nullopt;
    case PayloadKind::kData:
      return std::make_pair(std::string("Data"), to_json(*m.data()));
    case PayloadKind::kServices:
      return std::make_pair(std::string("Info"), json{{"Services", to_json(*m.services())}});
    case PayloadKind::kPeers:
      return std::make_pair(std::string("Info"), json{{"Peers", to_json(*m.peers())}});
    case PayloadKind::kRetrieve:
      return std::make_pair(std::string("Retrieve"), to_json(*m.retrieve()));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Decoder helpers

[[noreturn]] void schema(const std::string& what) {
  throw DecodeError(DecodeError::Kind::kSchema, "schema error: " + what);
}

const json& member(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schema("missing \"" + std::string(key) + "\" in " + path);
  return *it;
}

const json& object_member(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_object()) schema(path + "." + key + " must be an object");
  return v;
}

std::int64_t as_int(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX)) schema(path + " out of range");
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (!s.empty() && ec == std::errc{} && ptr == s.data() + s.size()) return out;
  }
  schema(path + " must be an integer");
}

const std::string& as_string(const json& v, const std::string& path) {
  if (!v.is_string()) schema(path + " must be a string");
  return v.get_ref<const std::string&>();
}

Decimal as_decimal(const json& v, const std::string& path) {
  std::string text;
  if (v.is_string()) {
    text = v.get<std::string>();
  } else if (v.is_number()) {
    text = v.dump();
  } else {
    schema(path + " must be a decimal string");
  }
  auto d = Decimal::parse(text);
  if (!d) schema(path + " is not a decimal value: '" + text + "'");
  return *d;
}

Timestamp as_timestamp(const json& v, const std::string& path) {
  auto ts = parse_timestamp(as_string(v, path));
  if (!ts) schema(path + " is not an RFC 3339 timestamp");
  return *ts;
}

MinAveMax decode_group(const json& obj, const std::string& path) {
  return MinAveMax{as_decimal(member(obj, "min", path), path + ".min"),
                   as_decimal(member(obj, "ave", path), path + ".ave"),
                   as_decimal(member(obj, "max", path), path + ".max")};
}

PrecipitationEvent decode_event(const json& obj, const std::string& path) {
  return PrecipitationEvent{as_decimal(member(obj, "accumulation", path), path + ".accumulation"),
                            as_decimal(member(obj, "duration", path), path + ".duration"),
                            as_decimal(member(obj, "intensity", path), path + ".intensity"),
                            as_decimal(member(obj, "peak", path), path + ".peak")};
}

WeatherData decode_data(const json& data) {
  WeatherData out;
  for (auto it = data.begin(); it != data.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (!v.is_object()) schema("Data." + key + " must be an object");
    if (key == "PTU") {
      out.ptu = PtuReading{as_decimal(member(v, "Air-Temperature", "Data.PTU"), "Data.PTU.Air-Temperature"),
                           as_decimal(member(v, "Relative-Humidity", "Data.PTU"), "Data.PTU.Relative-Humidity"),
                           as_decimal(member(v, "Air-Pressure", "Data.PTU"), "Data.PTU.Air-Pressure")};
    } else if (key == "WIND") {
      out.wind = WindReading{decode_group(object_member(v, "Direction", "Data.WIND"), "Data.WIND.Direction"),
                             decode_group(object_member(v, "Speed", "Data.WIND"), "Data.WIND.Speed")};
    } else if (key == "PRECIPITATION") {
      out.precipitation = PrecipitationReading{
          decode_event(object_member(v, "Rain", "Data.PRECIPITATION"), "Data.PRECIPITATION.Rain"),
          decode_event(object_member(v, "Hail", "Data.PRECIPITATION"), "Data.PRECIPITATION.Hail")};
    } else {
      schema("unknown Data group \"" + key + "\"");
    }
  }
  return out;
}

ServiceCatalog decode_services(const json& obj) {
  ServiceCatalog out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    auto svc = parse_service(it.key());
    if (!svc) schema("unknown service \"" + it.key() + "\" in Info.Services");
    auto flags = parse_flags(as_string(it.value(), "Info.Services." + it.key()));
    if (!flags) schema("Info.Services." + it.key() + " must be \"R\", \"O\" or \"RO\"");
    out.services[*svc] = *flags;
  }
  return out;
}

PeerListing decode_peers(const json& obj) {
  PeerListing out;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string path = "Info.Peers." + it.key();
    if (!it.value().is_object()) schema(path + " must be an object");
    const json& e = it.value();
    std::int64_t bw = as_int(member(e, "Bandwidth", path), path + ".Bandwidth");
    if (bw < 0) schema(path + ".Bandwidth must be non-negative");
    out.entries.emplace(NodeId{it.key()},
                        PeerEntry{as_string(member(e, "Peer-IP", path), path + ".Peer-IP"),
                                  as_int(member(e, "Port", path), path + ".Port"),
                                  BandwidthClass{static_cast<std::uint64_t>(bw)}});
  }
  return out;
}

RetrieveRequest decode_retrieve(const json& obj) {
  RetrieveRequest out;
  const json& d = member(obj, "D", "Retrieve");
  auto add = [&](const json& v) {
    auto svc = parse_service(as_string(v, "Retrieve.D"));
    if (!svc) schema("unknown service \"" + v.get<std::string>() + "\" in Retrieve.D");
    out.services.push_back(*svc);
  };
  if (d.is_array()) {
    for (const auto& v : d) add(v);
  } else {
    add(d);
  }
  out.timestamp = as_timestamp(member(obj, "Timestamp", "Retrieve"), "Retrieve.Timestamp");
  return out;
}

MetaInfo decode_meta(const json& m) {
  const std::string p = "MetaInfo";
  MetaInfo out;
  std::int64_t bw = as_int(member(m, "Bandwidth", p), "MetaInfo.Bandwidth");
  if (bw < 0) schema("MetaInfo.Bandwidth must be non-negative");
  out.bandwidth = BandwidthClass{static_cast<std::uint64_t>(bw)};
  out.id = NodeId{as_string(member(m, "ID", p), "MetaInfo.ID")};
  out.keep_alive_ms = as_int(member(m, "Keep-Alive", p), "MetaInfo.Keep-Alive");
  auto loc = UtmLocation::parse(as_string(member(m, "Location", p), "MetaInfo.Location"));
  if (!loc) schema("MetaInfo.Location must be \"<northing> <easting> <zone>\"");
  out.location = *loc;
  out.peer_ip = as_string(member(m, "Peer-IP", p), "MetaInfo.Peer-IP");
  // Some illustrative tables spell the key "Peers-Request".
  const char* peers_key = m.contains("Peers-Requested") ? "Peers-Requested" : "Peers-Request";
  out.peers_requested = as_int(member(m, peers_key, p), "MetaInfo.Peers-Requested");
  out.port = as_int(member(m, "Port", p), "MetaInfo.Port");
  out.timestamp = as_timestamp(member(m, "Timestamp", p), "MetaInfo.Timestamp");
  out.update_interval_ms = as_int(member(m, "Update-Interval", p), "MetaInfo.Update-Interval");
  out.version = as_string(member(m, "Version", p), "MetaInfo.Version");
  return out;
}

const json* find_retrieve(const json& obj) {
  if (auto it = obj.find("Retrieve"); it != obj.end()) return &*it;
  if (auto it = obj.find("Retrive"); it != obj.end()) return &*it;
  return nullptr;
}

}  // namespace

std::vector<Violation> validate(const Envelope& m) {
  std::vector<Violation> out;
  const int code = code_value(m.type);
  if (!is_registered_code(code)) {
    out.push_back({"Type", "unregistered protocol code " + std::to_string(code)});
  }

  const MetaInfo& meta = m.meta;
  if (!meta.id.valid()) out.push_back({"MetaInfo.ID", "ID is not 64 lowercase hex characters"});
  if (!valid_ip_address(meta.peer_ip)) {
    out.push_back({"MetaInfo.Peer-IP", "Peer-IP is not an IPv4 or IPv6 address"});
  }
  if (meta.port < 1 || meta.port > 65535) out.push_back({"MetaInfo.Port", "port outside 1..65535"});
  if (!valid_utm_zone(meta.location.zone)) {
    out.push_back({"MetaInfo.Location", "UTM zone must be 1-2 digits and a band letter"});
  }
  if (meta.update_interval_ms <= 0) {
    out.push_back({"MetaInfo.Update-Interval", "update_interval_ms must be positive"});
  }
  if (meta.peers_requested < 1) {
    out.push_back({"MetaInfo.Peers-Requested", "peers_requested below 1"});
  } else if (meta.peers_requested > kMaxPeersRequested) {
    out.push_back({"MetaInfo.Peers-Requested", "peers_requested above 100"});
  }
  if (meta.keep_alive_ms <= 0) out.push_back({"MetaInfo.Keep-Alive", "keep_alive_ms must be positive"});
  if (!valid_version(meta.version)) {
    out.push_back({"MetaInfo.Version", "version must match OpenWeather/<major>.<minor>"});
  }

  const PayloadKind want = is_registered_code(code) ? expected_payload(m.type) : PayloadKind::kNone;
  const PayloadKind have = m.payload_kind();
  if (want != have) {
    if (have == PayloadKind::kNone) {
      const char* category = code >= 200 && code < 300 ? "request" : "retrieval";
      out.push_back({"payload", std::string("payload missing for ") + category + " code"});
    } else if (want == PayloadKind::kNone) {
      out.push_back({"payload", "code " + std::to_string(code) + " carries no payload but got " +
                                    std::string(payload_kind_name(have))});
    } else {
      out.push_back({"payload", "code " + std::to_string(code) + " expects " +
                                    std::string(payload_kind_name(want)) + " but got " +
                                    std::string(payload_kind_name(have))});
    }
  }

  if (const WeatherData* d = m.data()) {
    if (d->empty()) out.push_back({"Data", "Data block has no measurement groups"});
    check_weather(*d, "Data.", out);
  }
  if (const ServiceCatalog* c = m.services()) {
    for (const auto& [svc, flags] : c->services) {
      if (!flags.realtime && !flags.on_demand) {
        out.push_back({"Info.Services." + std::string(service_name(svc)), "service flags must be R, O or RO"});
      }
    }
  }
  if (const PeerListing* l = m.peers()) {
    if (l->entries.empty() || l->entries.size() > static_cast<std::size_t>(kMaxPeersRequested)) {
      out.push_back({"Info.Peers", "peer listing must hold 1..100 entries"});
    }
    for (const auto& [id, e] : l->entries) {
      const std::string path = "Info.Peers." + id.hex();
      if (!id.valid()) out.push_back({path, "peer ID is not 64 lowercase hex characters"});
      if (!valid_ip_address(e.peer_ip)) out.push_back({path + ".Peer-IP", "Peer-IP is not an IP address"});
      if (e.port < 1 || e.port > 65535) out.push_back({path + ".Port", "port outside 1..65535"});
    }
  }
  if (const RetrieveRequest* r = m.retrieve()) {
    if (r->services.empty()) out.push_back({"Retrieve.D", "service list is empty"});
    std::set<Service> seen;
    for (Service s : r->services) {
      if (!seen.insert(s).second) {
        out.push_back({"Retrieve.D", "duplicate service " + std::string(service_name(s))});
      }
    }
  }
  return out;
}

std::string encode(const Envelope& m) {
  auto violations = validate(m);
  if (!violations.empty()) throw EncodeError(violations.front().field, violations.front().message);

  json msg = json::object();
  msg["Type"] = code_value(m.type);
  msg["MetaInfo"] = to_json(m.meta);
  if (auto p = payload_json(m)) msg[p->first] = std::move(p->second);
  return canonical(json{{"OpenWeatherMessage", std::move(msg)}});
}

std::string encode_payload(const Envelope& m) {
  auto p = payload_json(m);
  return p ? canonical(p->second) : std::string("{ }");
}

std::string encode_services(const ServiceCatalog& catalog) { return canonical(to_json(catalog)); }
std::string encode_peers(const PeerListing& listing) { return canonical(to_json(listing)); }
std::string encode_data(const WeatherData& data) { return canonical(to_json(data)); }

Envelope decode(std::string_view bytes) {
  json root;
  try {
    root = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw DecodeError(DecodeError::Kind::kParse, std::string("parse error: ") + e.what(), offset);
  }

  if (!root.is_object() || root.size() != 1 || !root.contains("OpenWeatherMessage")) {
    schema("expected exactly one top-level \"OpenWeatherMessage\" object");
  }
  const json& msg = root["OpenWeatherMessage"];
  if (!msg.is_object()) schema("OpenWeatherMessage must be an object");

  Envelope out;
  std::int64_t code = as_int(member(msg, "Type", "OpenWeatherMessage"), "Type");
  if (code < 0 || code > 0xffff || !is_registered_code(static_cast<int>(code))) {
    throw DecodeError(DecodeError::Kind::kUnknownCode, "unknown protocol code " + std::to_string(code));
  }
  out.type = static_cast<ProtocolCode>(code);
  out.meta = decode_meta(object_member(msg, "MetaInfo", "OpenWeatherMessage"));

  int payloads = 0;
  if (auto it = msg.find("Data"); it != msg.end()) {
    if (!it->is_object()) schema("Data must be an object");
    ++payloads;
    // Retrieval requests may also arrive nested inside Data.
    if (const json* r = find_retrieve(*it)) {
      if (it->size() != 1 || !r->is_object()) schema("Data.Retrieve must be the only member of Data");
      out.payload = decode_retrieve(*r);
    } else {
      out.payload = decode_data(*it);
    }
  }
  if (auto it = msg.find("Info"); it != msg.end()) {
    if (!it->is_object()) schema("Info must be an object");
    ++payloads;
    bool has_services = it->contains("Services");
    bool has_peers = it->contains("Peers");
    if (has_services == has_peers) schema("Info must hold exactly one of Services or Peers");
    if (has_services) {
      out.payload = InfoPayload{decode_services(object_member(*it, "Services", "Info"))};
    } else {
      out.payload = InfoPayload{decode_peers(object_member(*it, "Peers", "Info"))};
    }
  }
  if (const json* r = find_retrieve(msg)) {
    if (!r->is_object()) schema("Retrieve must be an object");
    ++payloads;
    out.payload = decode_retrieve(*r);
  }
  if (payloads > 1) schema("at most one of Data, Info, Retrieve may be present");
  return out;
}

}  // namespace owp
