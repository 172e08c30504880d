// Acceptance checks, one line per criterion.

#include <sodium.h>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "openweather/codec.hpp"
#include "openweather/engine.hpp"
#include "openweather/errors.hpp"
#include "openweather/identity.hpp"
#include "openweather/scenario.hpp"
#include "openweather/vendor_parser.hpp"
#include "test_support.hpp"

namespace owp {
namespace {

// Collects failure notes; a check passes when none were recorded.
struct Check {
  std::vector<std::string> notes;
  void expect(bool ok, const std::string& what) {
    if (!ok && notes.size() < 5) notes.push_back(what);
    if (!ok && notes.size() == 5) notes.push_back("...");
  }
};

const TimePoint kT0 = testing::at("2011-07-25T14:15:35Z");

NodeConfig node_config(const std::string& id) {
  NodeConfig c;
  c.id = NodeId{id};
  c.location = *UtmLocation::parse("6672224 385565 35V");
  c.bandwidth = BandwidthClass{6};
  return c;
}

void ac1_capture_decoding(Check& c) {
  Envelope t1 = decode(testing::capture("test1_node1_handshake.json"));
  c.expect(t1.type == ProtocolCode::kHandshake, "test1 type");
  c.expect(t1.meta.bandwidth.raw == 6, "test1 bandwidth");
  c.expect(t1.meta.port == 62535, "test1 port");
  c.expect(t1.meta.peer_ip == "172.21.25.16", "test1 peer ip");
  c.expect(t1.meta.location.str() == "6672224 385565 35V", "test1 location");
  c.expect(format_timestamp(t1.meta.timestamp) == "2011-07-20T16:51:29Z", "test1 timestamp");
  Envelope t1r = decode(testing::capture("test1_node2_handshake_status.json"));
  c.expect(t1r.type == ProtocolCode::kHandshakeStatus, "test1 reply type");

  Envelope t2 = decode(testing::capture("test2_node3_services_request.json"));
  c.expect(t2.type == ProtocolCode::kServicesAvailable, "test2 type");
  Envelope t2r = decode(testing::capture("test2_node4_services_reply.json"));
  c.expect(t2r.services() && *t2r.services() == ServiceCatalog::all(), "test2 catalog");
  c.expect(t2r.meta.bandwidth.raw == 0, "test2 bandwidth");

  Envelope t3 = decode(testing::capture("test3_node4_realtime_request.json"));
  c.expect(t3.type == ProtocolCode::kRealTimeData, "test3 type");
  Envelope t3r = decode(testing::capture("test3_node1_realtime_data.json"));
  const WeatherData* d = t3r.data();
  c.expect(d && d->ptu && d->ptu->air_temperature.text() == "19.1" && d->ptu->relative_humidity.text() == "69.4" &&
               d->ptu->air_pressure.text() == "1014.1",
           "test3 PTU");
  c.expect(d && d->wind && d->wind->direction.ave.text() == "160" && d->wind->speed.max.text() == "1.8",
           "test3 WIND");
  c.expect(d && *d == testing::test3_data(), "test3 data block");
}

void ac2_sizes(Check& c) {
  // Printed sizes and the oracle's canonical lengths.
  struct Row {
    const char* file;
    double printed;
    std::size_t pinned;
  };
  const Row rows[] = {
      {"test1_node1_handshake.json", 375, 375},        {"test1_node2_handshake_status.json", 375, 375},
      {"test2_node3_services_request.json", 375, 375}, {"test2_node4_services_reply.json", 458, 458},
      {"test3_node4_realtime_request.json", 375, 375}, {"test3_node1_realtime_data.json", 814, 814},
  };
  for (const auto& r : rows) {
    std::size_t n = encode(decode(testing::capture(r.file))).size();
    c.expect(n == r.pinned, std::string(r.file) + " canonical " + std::to_string(n));
    c.expect(std::abs(static_cast<double>(n) - r.printed) <= 0.05 * r.printed, std::string(r.file) + " tolerance");
  }
}

void ac3_scenario(Check& c) {
  Simulation sim(Scenario::load(std::string(OWP_SCENARIOS) + "/four_nodes.txt"));
  const auto& trace = sim.run();
  auto count = [&](std::int64_t from, std::int64_t to) {
    return std::count_if(trace.begin(), trace.end(), [&](const TraceEvent& e) {
      return e.kind == TraceKind::kSend && e.time_ms >= from && e.time_ms < to;
    });
  };
  c.expect(count(0, 500) == 2, "test1 n1-n2 messages");
  c.expect(count(500, 1000) == 2, "test1 n3-n4 messages");
  c.expect(count(1000, 2000) == 2, "test1 n4-n1 messages");
  c.expect(count(2000, 4000) == 2, "test2 messages");
  c.expect(count(4000, 5000) == 2, "test3 messages");
  const TraceEvent* reply = nullptr;
  for (const auto& e : trace) {
    if (e.kind == TraceKind::kSend && e.type == 300) reply = &e;
  }
  c.expect(reply != nullptr, "no type 300 in trace");
  if (!reply) return;
  const std::int64_t model = (815 * 8 * 1000 + 56000 - 1) / 56000;
  c.expect(model == 117, "model arithmetic");
  c.expect(reply->bytes == 814, "300 size " + std::to_string(reply->bytes));
  c.expect(reply->tx_ms == model, "300 serialization " + std::to_string(reply->tx_ms));
  c.expect(reply->arrival_ms - reply->time_ms == model + 20, "300 arrival");
}

std::string sodium_hex(const std::string& text) {
  unsigned char out[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(out, reinterpret_cast<const unsigned char*>(text.data()), text.size());
  char hex[2 * crypto_hash_sha256_BYTES + 1];
  sodium_bin2hex(hex, sizeof hex, out, sizeof out);
  return hex;
}

void ac4_identity(Check& c) {
  c.expect(sodium_init() >= 0, "sodium_init");
  std::mt19937_64 rng(4);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ -";
  auto word = [&] {
    std::string s(1 + rng() % 24, ' ');
    for (char& ch : s) ch = alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int i = 0; i < 100; ++i) {
    char block[3], station[4];
    std::snprintf(block, sizeof block, "%02d", static_cast<int>(rng() % 100));
    std::snprintf(station, sizeof station, "%03d", static_cast<int>(rng() % 1000));
    StationDescriptor d{block, station, word(), word()};
    c.expect(derive_node_id(d).hex() == sodium_hex(d.block + ";" + d.station + ";" + d.place + ";;" + d.country),
             "descriptor " + std::to_string(i));
  }
  const std::string printed = "a88a9b6b4c0381e0509ce36cadb5fd06e5446ab23881020b9f212db24b16ee75";
  c.expect(sodium_hex("02;974;Helsinki-Vantaa;;Finland") == printed, "printed Helsinki hash vs oracle");
  c.expect(derive_node_id({"02", "974", "Helsinki-Vantaa", "Finland"}).hex() == printed, "Helsinki hash");
}

void ac5_bandwidth(Check& c) {
  const std::uint64_t table[] = {56'000, 128'000, 256'000, 512'000, 1'000'000, 10'000'000, 100'000'000};
  for (std::uint64_t k = 0; k < 7; ++k) {
    c.expect(bandwidth_to_bps(BandwidthClass{k}) == table[k], "class " + std::to_string(k));
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t v = 7 + rng() % (UINT64_MAX - 7);
    c.expect(bandwidth_to_bps(BandwidthClass{v}) == v, "pass-through " + std::to_string(v));
  }
}

void ac6_keep_alive(Check& c) {
  testing::EnvelopeFactory f(6);
  Engine e(node_config(testing::sample_meta().id.hex()), "10.0.0.1");
  std::vector<Session> sessions;
  for (SessionId i = 1; i <= 50; ++i) {
    Session s = e.open_session(i, kT0 + Millis{static_cast<long long>(f.pick(30000))});
    s.state = static_cast<SessionState>(f.pick(4));
    if (f.pick(3)) {
      PeerRecord r;
      r.keep_alive = Millis{1000 + static_cast<long long>(f.pick(60000))};
      s.remote = r;
    }
    sessions.push_back(s);
  }
  std::vector<Session> oracle = sessions;
  std::vector<Session*> ptrs;
  for (auto& s : sessions) ptrs.push_back(&s);

  for (TimePoint now = kT0; now <= kT0 + Millis{200000}; now += Millis{250}) {
    // Some sessions hear from their peer along the way.
    for (int k = 0; k < 3; ++k) {
      std::size_t i = f.pick(sessions.size());
      if (sessions[i].state != SessionState::kClosed) {
        sessions[i].last_rx = now;
        oracle[i].last_rx = now;
      }
    }
    std::set<SessionId> want;
    for (auto& s : oracle) {
      Millis budget = s.remote ? s.remote->keep_alive : Millis{e.config().keep_alive_ms};
      if (s.state != SessionState::kClosed && s.last_rx + budget < now) {
        want.insert(s.id);
        s.state = SessionState::kClosed;
      }
    }
    std::set<SessionId> got;
    for (const auto& a : e.keep_alive_sweep(ptrs, now)) got.insert(std::get<CloseSession>(a).session);
    c.expect(got == want, "sweep mismatch at +" + std::to_string((now - kT0).count()) + " ms");
  }

  Session edge = e.open_session(99, kT0);
  edge.state = SessionState::kEstablished;
  Session* one[] = {&edge};
  c.expect(e.keep_alive_sweep(one, kT0 + Millis{e.config().keep_alive_ms}).empty(), "boundary expired");
  c.expect(e.keep_alive_sweep(one, kT0 + Millis{e.config().keep_alive_ms + 1}).size() == 1, "boundary + 1 kept");
}

// Replies the dispatch table allows for an incoming code, per state.
std::set<int> allowed(SessionState st, ProtocolCode code) {
  const bool open = st == SessionState::kEstablished || st == SessionState::kStreaming;
  const int v = code_value(code);
  if (st == SessionState::kClosed) return {};
  if (v == 104 || v == 106 || (v >= 500 && v < 700)) return {};
  switch (v) {
    case 100: return {101};
    case 101: return st == SessionState::kHandshakeSent ? std::set<int>{} : std::set<int>{600};
    case 102: return open ? std::set<int>{103} : std::set<int>{600};
    case 103: return open ? std::set<int>{104} : std::set<int>{600};
    case 105: return open ? std::set<int>{106} : std::set<int>{600};
    case 107: return open ? std::set<int>{105, 602} : std::set<int>{600};
    case 200: return open ? std::set<int>{300, 602} : std::set<int>{600};
    case 201: return open ? std::set<int>{301, 601, 602} : std::set<int>{600};
    case 202: return st == SessionState::kStreaming ? std::set<int>{500} : std::set<int>{600};
    case 300:
    case 301: return open ? std::set<int>{} : std::set<int>{600};
  }
  return {600};
}

void ac7_state_machine(Check& c) {
  testing::EnvelopeFactory f(7);
  const SessionState states[] = {SessionState::kIdle, SessionState::kHandshakeSent, SessionState::kEstablished,
                                 SessionState::kStreaming, SessionState::kClosed};
  int cases = 0;
  for (SessionState st : states) {
    for (ProtocolCode code : registered_codes()) {
      for (bool stocked : {false, true}) {
        Engine e(node_config(testing::sample_meta().id.hex()), "172.21.25.16", 1);
        Envelope m = f.next(code);
        if (stocked) {
          PeerRecord p;
          p.id = NodeId{f.hex64()};
          p.address = "10.0.0.2";
          p.port = 62535;
          e.peers().upsert(p);
          NormalizedSample sample;
          sample.timestamp = to_timestamp(kT0);
          sample.ptu = testing::test3_data().ptu;
          e.store().insert(sample);
          if (code == ProtocolCode::kOnDemandData) m.payload = RetrieveRequest{{Service::kPtu}, sample.timestamp};
        }
        Session s = e.open_session(1, kT0);
        s.state = st;
        Actions out = e.handle_message(s, m, kT0 + Millis{5});
        std::set<int> ok = allowed(st, code);
        std::string where = std::string(state_name(st)) + "<-" + std::to_string(code_value(code));
        for (const auto& a : out) {
          if (const auto* send = std::get_if<SendMessage>(&a)) {
            int v = code_value(send->message.type);
            c.expect(ok.count(v) == 1, where + " sent " + std::to_string(v));
            auto problems = validate(send->message);
            c.expect(problems.empty(), where + " invalid " + (problems.empty() ? "" : problems.front().field));
          }
        }
        if (st == SessionState::kClosed) c.expect(out.empty(), where + " acted while closed");
        ++cases;
      }
    }
  }
  c.expect(cases == 5 * static_cast<int>(registered_codes().size()) * 2, "case count");
}

void ac8_vendor(Check& c) {
  std::istringstream in(testing::read_file(std::string(OWP_FIXTURES) + "/vendor_lines.txt"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  c.expect(lines.size() >= 2, "fixture lines");
  if (lines.size() < 2) return;
  const char* want[2][3] = {{"18.7", "77.4", "1002.1"}, {"23.6", "14.2", "1026.6"}};
  for (int i = 0; i < 2; ++i) {
    try {
      NormalizedSample s = to_sample(parse_line(lines[i]), to_timestamp(kT0));
      c.expect(s.ptu && s.ptu->air_temperature.text() == want[i][0] &&
                   s.ptu->relative_humidity.text() == want[i][1] && s.ptu->air_pressure.text() == want[i][2],
               "printed line " + std::to_string(i + 1));
    } catch (const Error& e) {
      c.expect(false, std::string("printed line threw: ") + e.what());
    }
  }

  std::mt19937_64 rng(8);
  int aborted = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string line(rng() % 80, ' ');
    for (char& ch : line) ch = static_cast<char>(0x20 + rng() % 95);
    if (rng() % 2) line = "0r2,Ta=" + line;
    try {
      to_sample(parse_line(line), to_timestamp(kT0));
    } catch (const VendorFormatError&) {
    } catch (const VendorValueError&) {
    } catch (...) {
      ++aborted;
    }
  }
  c.expect(aborted == 0, std::to_string(aborted) + " fuzzed lines escaped the vendor errors");

  for (int i = 0; i < 1000; ++i) {
    std::string text = Decimal::from_scaled(static_cast<long long>(rng() % 200001) - 100000,
                                            static_cast<int>(rng() % 4))
                           .text();
    SampleFragment fr = parse_line("0r2,Ta=" + text + "C");
    c.expect(fr.values.at(SampleField::kAirTemperature).text() == text, "decimal " + text);
  }
}

void ac9_round_trip(Check& c) {
  testing::EnvelopeFactory f(9);
  for (int i = 0; i < 1000; ++i) {
    Envelope m = f.next();
    std::string bytes = encode(m);
    Envelope back = decode(bytes);
    c.expect(back == m, "decode(encode) differs at " + std::to_string(i));
    c.expect(encode(back) == bytes, "bytes unstable at " + std::to_string(i));
  }
}

void ac10_on_demand(Check& c) {
  Engine e(node_config(testing::sample_meta().id.hex()), "172.21.25.16");
  GeneratorConfig g;
  g.seed = 10;
  g.precipitation_probability = 0.5;
  SampleGenerator gen(g);
  Session s = e.open_session(1, kT0);
  s.state = SessionState::kStreaming;
  Session* serving[] = {&s};
  Envelope request;
  request.type = ProtocolCode::kOnDemandData;
  request.meta = testing::sample_meta();
  for (int i = 0; i < 20; ++i) {
    TimePoint t = kT0 + Millis{3000 * i};
    Actions rt = e.ingest_sample(gen.next_sample(to_timestamp(t)), serving, t);
    c.expect(rt.size() == 1, "one 300 per sample");
    if (rt.size() != 1) continue;
    const Envelope& m300 = std::get<SendMessage>(rt[0]).message;
    request.payload = RetrieveRequest{{Service::kPtu, Service::kWind, Service::kPrecipitation}, m300.meta.timestamp};
    Actions od = e.handle_message(s, request, t + Millis{60000});
    c.expect(od.size() == 1 && std::holds_alternative<SendMessage>(od[0]), "one 301 per request");
    if (od.size() != 1 || !std::holds_alternative<SendMessage>(od[0])) continue;
    Envelope m301 = std::get<SendMessage>(od[0]).message;
    c.expect(m301.type == ProtocolCode::kOnDemandDataReply, "type 301");
    c.expect(*m301.data() == *m300.data(), "data blocks differ");
    c.expect(encode_data(*m301.data()) == encode_data(*m300.data()), "data bytes differ");
    // Nothing else differs apart from Type and the header timestamp.
    Envelope normalized = m301;
    normalized.type = m300.type;
    normalized.meta.timestamp = m300.meta.timestamp;
    c.expect(normalized == m300, "envelopes differ beyond Type and Timestamp");
  }
}

}  // namespace
}  // namespace owp

int main() {
  using Fn = void (*)(owp::Check&);
  const std::pair<const char*, Fn> checks[] = {
      {"AC1 capture decoding", owp::ac1_capture_decoding},
      {"AC2 size reproduction", owp::ac2_sizes},
      {"AC3 scenario replay", owp::ac3_scenario},
      {"AC4 identity", owp::ac4_identity},
      {"AC5 bandwidth table", owp::ac5_bandwidth},
      {"AC6 keep-alive", owp::ac6_keep_alive},
      {"AC7 state machine", owp::ac7_state_machine},
      {"AC8 vendor parsing", owp::ac8_vendor},
      {"AC9 round-trip property", owp::ac9_round_trip},
      {"AC10 on-demand equivalence", owp::ac10_on_demand},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    owp::Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.notes.push_back(std::string("threw: ") + e.what());
    }
    std::cout << name << ": " << (c.notes.empty() ? "PASS" : "FAIL");
    for (const auto& n : c.notes) std::cout << " [" << n << "]";
    std::cout << "\n";
    if (!c.notes.empty()) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
