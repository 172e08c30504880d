#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "openweather/message.hpp"
#include "openweather/peer_state.hpp"
#include "openweather/sensor_source.hpp"

namespace owp {

struct NodeConfig {
  NodeId id;
  std::uint16_t listen_port = kDefaultPort;
  UtmLocation location;
  std::int64_t update_interval_ms = kDefaultUpdateIntervalMs;
  std::int64_t peers_requested = kDefaultPeersRequested;
  std::int64_t keep_alive_ms = kDefaultKeepAliveMs;
  BandwidthClass bandwidth;
  std::string version{kProtocolVersion};
  ServiceCatalog services = ServiceCatalog::all();
  bool super_node = false;
  // Answer a services reply (103) with a 104 status. Off by default so a
  // discovery exchange stays at two messages, as in the captured traffic.
  bool acknowledge_service_catalog = false;
};

MetaInfo build_metainfo(const NodeConfig& config, std::string_view local_address, Timestamp now);

enum class SessionState { kIdle, kHandshakeSent, kEstablished, kStreaming, kClosed };

std::string_view state_name(SessionState s);

using SessionId = std::uint64_t;

// One connection as seen by the protocol. kStreaming means this node is
// serving a real-time stream on it; stream_active means this node asked the
// remote for one.
struct Session {
  SessionId id = 0;
  SessionState state = SessionState::kIdle;
  std::optional<PeerRecord> remote;
  TimePoint last_rx{};
  bool stream_active = false;
  bool alive_check_pending = false;

  bool established() const {
    return state == SessionState::kEstablished || state == SessionState::kStreaming;
  }
};

struct SendMessage {
  SessionId session;
  Envelope message;
};
struct CloseSession {
  SessionId session;
  std::string reason;
};
struct RegisterPeer {
  PeerRecord peer;
};
struct StartStream {
  SessionId session;
};
struct StopStream {
  SessionId session;
};
// Message consumed with no observable effect.
struct StoreNothing {};

using Action = std::variant<SendMessage, CloseSession, RegisterPeer, StartStream, StopStream, StoreNothing>;
using Actions = std::vector<Action>;

enum class DataOrigin { kRealTime, kOnDemand };

struct AppCallbacks {
  std::function<void(const Session&, const ServiceCatalog&)> on_service_catalog;
  std::function<void(const Session&, const Envelope&, DataOrigin)> on_weather_data;
  std::function<void(const Session&, const PeerListing&)> on_peer_list;
  std::function<void(const Session&, ProtocolCode)> on_error;
  std::function<void(const Session&, ProtocolCode)> on_status;
};

// Pure protocol logic: messages in, actions out. The peer table and sample
// store live here; sockets and timers belong to the caller.
class Engine {
 public:
  Engine(NodeConfig config, std::string local_address, std::uint64_t seed = 0);

  const NodeConfig& config() const { return config_; }
  const std::string& local_address() const { return local_address_; }
  void set_local_address(std::string address) { local_address_ = std::move(address); }
  void set_listen_port(std::uint16_t port) { config_.listen_port = port; }
  AppCallbacks& callbacks() { return callbacks_; }

  PeerTable& peers() { return peers_; }
  const PeerTable& peers() const { return peers_; }
  SampleStore& store() { return store_; }
  const SampleStore& store() const { return store_; }

  MetaInfo metainfo(TimePoint now) const;

  // Fresh session; last_rx starts at `now` so silent connections expire.
  Session open_session(SessionId id, TimePoint now) const;

  // Idle -> HandshakeSent with one Type 100. Throws StateError otherwise.
  Actions initiate_handshake(Session& s, TimePoint now);

  // Never throws for a decoded message.
  Actions handle_message(Session& s, const Envelope& message, TimePoint now);

  // Bytes that failed to decode: Type 600 unless the session is closed.
  Actions handle_undecodable(Session& s, TimePoint now);

  // Each emits exactly one request. Throws StateError unless established.
  Actions request_service_catalog(Session& s, TimePoint now);
  Actions request_peer_list(Session& s, TimePoint now);
  Actions request_realtime(Session& s, TimePoint now);
  Actions stop_realtime(Session& s, TimePoint now);  // requires stream_active
  // Throws ArgumentError on an empty or repeated service list.
  Actions request_on_demand(Session& s, const std::vector<Service>& services, Timestamp at, TimePoint now);

  // Re-exchanges 100/101 on an established session.
  Actions verify_alive(Session& s, TimePoint now);

  // Closes every open session with last_rx + remote keep-alive < now.
  Actions keep_alive_sweep(std::span<Session* const> sessions, TimePoint now);

  // Stores the sample and sends it as Type 300 on every serving session.
  Actions ingest_sample(const NormalizedSample& sample, std::span<Session* const> sessions, TimePoint now);

  // Data block streamed for a sample: groups whose service is flagged "R".
  WeatherData realtime_block(const NormalizedSample& sample) const;

 private:
  Envelope make(ProtocolCode code, TimePoint now) const;
  SendMessage reply(const Session& s, ProtocolCode code, TimePoint now) const;
  PeerRecord record_from(const MetaInfo& meta, TimePoint now) const;
  void require_established(const Session& s, const char* op) const;

  Actions on_handshake(Session& s, const Envelope& m, TimePoint now);
  Actions on_on_demand(Session& s, const Envelope& m, TimePoint now);
  Actions on_peer_listing(Session& s, const PeerListing& listing, TimePoint now);

  NodeConfig config_;
  std::string local_address_;
  PeerTable peers_;
  SampleStore store_;
  std::mt19937_64 rng_;
  AppCallbacks callbacks_;
};

}  // namespace owp
