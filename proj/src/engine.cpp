#include "openweather/engine.hpp"

#include <algorithm>
#include <set>

#include "openweather/errors.hpp"

namespace owp {

MetaInfo build_metainfo(const NodeConfig& config, std::string_view local_address, Timestamp now) {
  MetaInfo m;
  m.id = config.id;
  m.peer_ip = std::string(local_address);
  m.port = config.listen_port;
  m.location = config.location;
  m.update_interval_ms = config.update_interval_ms;
  m.peers_requested = config.peers_requested;
  m.keep_alive_ms = config.keep_alive_ms;
  m.bandwidth = config.bandwidth;
  m.timestamp = now;
  m.version = config.version;
  return m;
}

std::string_view state_name(SessionState s) {
  switch (s) {
    case SessionState::kIdle: return "Idle";
    case SessionState::kHandshakeSent: return "HandshakeSent";
    case SessionState::kEstablished: return "Established";
    case SessionState::kStreaming: return "Streaming";
    case SessionState::kClosed: return "Closed";
  }
  return "?";
}

namespace {

WeatherData filter(const WeatherData& d, const std::function<bool(Service)>& keep) {
  WeatherData out;
  if (keep(Service::kPtu)) out.ptu = d.ptu;
  if (keep(Service::kWind)) out.wind = d.wind;
  if (keep(Service::kPrecipitation)) out.precipitation = d.precipitation;
  return out;
}

bool offers(const ServiceCatalog& c, Service s, bool realtime) {
  auto it = c.services.find(s);
  if (it == c.services.end()) return false;
  return realtime ? it->second.realtime : it->second.on_demand;
}

}  // namespace

Engine::Engine(NodeConfig config, std::string local_address, std::uint64_t seed)
    : config_(std::move(config)), local_address_(std::move(local_address)), rng_(seed) {}

MetaInfo Engine::metainfo(TimePoint now) const {
  return build_metainfo(config_, local_address_, to_timestamp(now));
}

Session Engine::open_session(SessionId id, TimePoint now) const {
  Session s;
  s.id = id;
  s.last_rx = now;
  return s;
}

Envelope Engine::make(ProtocolCode code, TimePoint now) const {
  Envelope e;
  e.type = code;
  e.meta = metainfo(now);
  return e;
}

SendMessage Engine::reply(const Session& s, ProtocolCode code, TimePoint now) const {
  return SendMessage{s.id, make(code, now)};
}

PeerRecord Engine::record_from(const MetaInfo& meta, TimePoint now) const {
  PeerRecord r;
  r.id = meta.id;
  r.address = meta.peer_ip;
  r.port = static_cast<std::uint16_t>(meta.port);
  r.bandwidth = meta.bandwidth;
  r.location = meta.location;
  r.last_rx = now;
  r.keep_alive = Millis{meta.keep_alive_ms};
  return r;
}

void Engine::require_established(const Session& s, const char* op) const {
  if (!s.established()) {
    throw StateError(std::string(op) + " requires an established session, state is " +
                     std::string(state_name(s.state)));
  }
}

Actions Engine::initiate_handshake(Session& s, TimePoint now) {
  if (s.state != SessionState::kIdle) {
    throw StateError("handshake requires an idle session, state is " + std::string(state_name(s.state)));
  }
  s.state = SessionState::kHandshakeSent;
  return {reply(s, ProtocolCode::kHandshake, now)};
}

Actions Engine::verify_alive(Session& s, TimePoint now) {
  require_established(s, "alive verification");
  s.alive_check_pending = true;
  return {reply(s, ProtocolCode::kHandshake, now)};
}

Actions Engine::request_service_catalog(Session& s, TimePoint now) {
  require_established(s, "service discovery");
  return {reply(s, ProtocolCode::kServicesAvailable, now)};
}

Actions Engine::request_peer_list(Session& s, TimePoint now) {
  require_established(s, "peer list request");
  return {reply(s, ProtocolCode::kListPeers, now)};
}

Actions Engine::request_realtime(Session& s, TimePoint now) {
  require_established(s, "real-time request");
  s.stream_active = true;
  return {reply(s, ProtocolCode::kRealTimeData, now)};
}

Actions Engine::stop_realtime(Session& s, TimePoint now) {
  require_established(s, "stop request");
  if (!s.stream_active) throw StateError("no real-time stream was requested on this session");
  s.stream_active = false;
  return {reply(s, ProtocolCode::kStopRealTimeData, now)};
}

Actions Engine::request_on_demand(Session& s, const std::vector<Service>& services, Timestamp at,
                                  TimePoint now) {
  require_established(s, "on-demand request");
  if (services.empty()) throw ArgumentError("on-demand request needs at least one service");
  if (std::set<Service>(services.begin(), services.end()).size() != services.size()) {
    throw ArgumentError("on-demand request lists a service twice");
  }
  Envelope e = make(ProtocolCode::kOnDemandData, now);
  e.payload = RetrieveRequest{services, at};
  return {SendMessage{s.id, std::move(e)}};
}

Actions Engine::handle_undecodable(Session& s, TimePoint now) {
  if (s.state == SessionState::kClosed) return {};
  s.last_rx = now;
  return {reply(s, ProtocolCode::kErrorUnexpected, now)};
}

Actions Engine::on_handshake(Session& s, const Envelope& m, TimePoint now) {
  PeerRecord r = record_from(m.meta, now);
  s.remote = r;
  Actions out;
  try {
    peers_.upsert(r);
    out.emplace_back(RegisterPeer{r});
  } catch (const CapacityError&) {
    // The session still works; the peer just is not shared onward.
  }
  if (s.state == SessionState::kIdle || s.state == SessionState::kHandshakeSent) {
    s.state = SessionState::kEstablished;
  }
  out.emplace_back(reply(s, ProtocolCode::kHandshakeStatus, now));
  return out;
}

Actions Engine::on_peer_listing(Session& s, const PeerListing& listing, TimePoint now) {
  Actions out;
  for (const auto& [id, entry] : listing.entries) {
    if (id == config_.id) continue;
    PeerRecord r;
    r.id = id;
    r.address = entry.peer_ip;
    r.port = static_cast<std::uint16_t>(entry.port);
    r.bandwidth = entry.bandwidth;
    r.last_rx = now;
    r.keep_alive = Millis{config_.keep_alive_ms};
    try {
      out.emplace_back(RegisterPeer{peers_.upsert(r)});
    } catch (const CapacityError&) {
      break;
    }
  }
  if (callbacks_.on_peer_list) callbacks_.on_peer_list(s, listing);
  out.emplace_back(reply(s, ProtocolCode::kListPeersStatus, now));
  return out;
}

Actions Engine::on_on_demand(Session& s, const Envelope& m, TimePoint now) {
  const RetrieveRequest* req = m.retrieve();
  if (!req || req->services.empty()) return {reply(s, ProtocolCode::kErrorUnexpected, now)};
  for (Service svc : req->services) {
    if (!offers(config_.services, svc, false)) return {reply(s, ProtocolCode::kErrorServiceUnavailable, now)};
  }
  const NormalizedSample* sample = store_.lookup(req->timestamp);
  if (!sample) return {reply(s, ProtocolCode::kErrorSampleNotFound, now)};
  WeatherData block = to_data_block(*sample);
  for (Service svc : req->services) {
    if (!block.has(svc)) return {reply(s, ProtocolCode::kErrorServiceUnavailable, now)};
  }
  const auto& wanted = req->services;
  Envelope e = make(ProtocolCode::kOnDemandDataReply, now);
  e.meta.timestamp = req->timestamp;
  e.payload = filter(block, [&](Service svc) {
    return std::find(wanted.begin(), wanted.end(), svc) != wanted.end();
  });
  return {SendMessage{s.id, std::move(e)}};
}

Actions Engine::handle_message(Session& s, const Envelope& m, TimePoint now) {
  if (s.state == SessionState::kClosed) return {};
  s.last_rx = now;
  if (s.remote && s.remote->id == m.meta.id) {
    s.remote->last_rx = now;
    if (const PeerRecord* known = peers_.find(m.meta.id)) {
      PeerRecord refreshed = *known;
      refreshed.last_rx = now;
      peers_.upsert(refreshed);
    }
  }

  const ProtocolCode code = m.type;
  const bool open = s.established();

  // Status codes are recorded, never answered, so two nodes cannot bounce
  // error statuses back and forth.
  if (is_success_status(code) || is_error_status(code) || code == ProtocolCode::kServicesAvailableStatus ||
      code == ProtocolCode::kListPeersStatus) {
    if (is_error_status(code)) {
      if (callbacks_.on_error) callbacks_.on_error(s, code);
    } else if (callbacks_.on_status) {
      callbacks_.on_status(s, code);
    }
    return {StoreNothing{}};
  }

  switch (code) {
    case ProtocolCode::kHandshake:
      return on_handshake(s, m, now);

    case ProtocolCode::kHandshakeStatus:
      if (s.state == SessionState::kHandshakeSent || (open && s.alive_check_pending)) {
        s.alive_check_pending = false;
        PeerRecord r = record_from(m.meta, now);
        s.remote = r;
        if (s.state == SessionState::kHandshakeSent) s.state = SessionState::kEstablished;
        try {
          return {RegisterPeer{peers_.upsert(r)}};
        } catch (const CapacityError&) {
          return {StoreNothing{}};
        }
      }
      break;

    case ProtocolCode::kServicesAvailable:
      if (open) {
        Envelope e = make(ProtocolCode::kServicesAvailableReply, now);
        e.payload = InfoPayload{config_.services};
        return {SendMessage{s.id, std::move(e)}};
      }
      break;

    case ProtocolCode::kServicesAvailableReply:
      if (open && m.services()) {
        if (callbacks_.on_service_catalog) callbacks_.on_service_catalog(s, *m.services());
        if (config_.acknowledge_service_catalog) return {reply(s, ProtocolCode::kServicesAvailableStatus, now)};
        return {StoreNothing{}};
      }
      break;

    case ProtocolCode::kListPeers:
      if (open) {
        SelectOptions opts;
        opts.exclude = m.meta.id;
        PeerListing listing =
            select_peers(peers_, static_cast<int>(m.meta.peers_requested), rng_, opts);
        if (listing.entries.empty()) return {reply(s, ProtocolCode::kErrorServiceUnavailable, now)};
        Envelope e = make(ProtocolCode::kListPeersReply, now);
        e.payload = InfoPayload{std::move(listing)};
        return {SendMessage{s.id, std::move(e)}};
      }
      break;

    case ProtocolCode::kListPeersReply:
      if (open && m.peers()) return on_peer_listing(s, *m.peers(), now);
      break;

    case ProtocolCode::kRealTimeData:
      if (open) {
        bool any = false;
        for (Service svc : kAllServices) any = any || offers(config_.services, svc, true);
        if (!any) return {reply(s, ProtocolCode::kErrorServiceUnavailable, now)};
        s.state = SessionState::kStreaming;
        Actions out{StartStream{s.id}};
        if (const NormalizedSample* latest = store_.latest()) {
          WeatherData block = realtime_block(*latest);
          if (!block.empty()) {
            Envelope e = make(ProtocolCode::kRealTimeDataReply, now);
            e.payload = std::move(block);
            out.emplace_back(SendMessage{s.id, std::move(e)});
          }
        }
        return out;
      }
      break;

    case ProtocolCode::kStopRealTimeData:
      if (s.state == SessionState::kStreaming) {
        s.state = SessionState::kEstablished;
        return {StopStream{s.id}, reply(s, ProtocolCode::kRealTimeDataStatus, now)};
      }
      break;

    case ProtocolCode::kOnDemandData:
      if (open) return on_on_demand(s, m, now);
      break;

    case ProtocolCode::kRealTimeDataReply:
    case ProtocolCode::kOnDemandDataReply:
      if (open && m.data()) {
        DataOrigin origin =
            code == ProtocolCode::kRealTimeDataReply ? DataOrigin::kRealTime : DataOrigin::kOnDemand;
        if (callbacks_.on_weather_data) callbacks_.on_weather_data(s, m, origin);
        return {StoreNothing{}};
      }
      break;

    default:
      break;
  }
  return {reply(s, ProtocolCode::kErrorUnexpected, now)};
}

Actions Engine::keep_alive_sweep(std::span<Session* const> sessions, TimePoint now) {
  Actions out;
  for (Session* s : sessions) {
    if (s->state == SessionState::kClosed) continue;
    Millis budget = s->remote ? s->remote->keep_alive : Millis{config_.keep_alive_ms};
    if (s->last_rx + budget < now) {
      s->state = SessionState::kClosed;
      s->stream_active = false;
      out.emplace_back(CloseSession{s->id, "keep-alive expired"});
    }
  }
  return out;
}

WeatherData Engine::realtime_block(const NormalizedSample& sample) const {
  return filter(to_data_block(sample), [&](Service svc) { return offers(config_.services, svc, true); });
}

Actions Engine::ingest_sample(const NormalizedSample& sample, std::span<Session* const> sessions,
                              TimePoint now) {
  store_.insert(sample);
  Actions out;
  WeatherData block = realtime_block(sample);
  if (block.empty()) return out;
  for (Session* s : sessions) {
    if (s->state != SessionState::kStreaming) continue;
    Envelope e = make(ProtocolCode::kRealTimeDataReply, now);
    e.payload = block;
    out.emplace_back(SendMessage{s->id, std::move(e)});
  }
  return out;
}

}  // namespace owp
