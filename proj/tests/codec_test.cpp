#include "openweather/codec.hpp"

#include <gtest/gtest.h>

#include "openweather/errors.hpp"
#include "test_support.hpp"

namespace owp {
namespace {

using testing::capture;
using testing::sample_meta;

struct CaptureSize {
  const char* file;
  std::size_t canonical_bytes;
};

// Pinned from tests/oracles/capture_sizes.py.
const CaptureSize kCaptures[] = {
    {"test1_node1_handshake.json", 375},        {"test1_node2_handshake_status.json", 375},
    {"test2_node3_services_request.json", 375}, {"test2_node4_services_reply.json", 458},
    {"test3_node4_realtime_request.json", 375}, {"test3_node1_realtime_data.json", 814},
};

TEST(CodecCaptures, Test1HandshakeFields) {
  Envelope m = decode(capture("test1_node1_handshake.json"));
  EXPECT_EQ(m.type, ProtocolCode::kHandshake);
  EXPECT_EQ(m.meta.bandwidth.raw, 6u);
  EXPECT_EQ(m.meta.id.hex(), "33c11957579d1093e931bd540536b40e90339dbded8e2a2ce4e64c480c8132bc");
  EXPECT_EQ(m.meta.keep_alive_ms, 120000);
  EXPECT_EQ(m.meta.location.str(), "6672224 385565 35V");
  EXPECT_EQ(m.meta.peer_ip, "172.21.25.16");
  EXPECT_EQ(m.meta.peers_requested, 20);
  EXPECT_EQ(m.meta.port, 62535);
  EXPECT_EQ(format_timestamp(m.meta.timestamp), "2011-07-20T16:51:29Z");
  EXPECT_EQ(m.meta.update_interval_ms, 120000);
  EXPECT_EQ(m.meta.version, "OpenWeather/1.0");
  EXPECT_EQ(m.payload_kind(), PayloadKind::kNone);

  Envelope reply = decode(capture("test1_node2_handshake_status.json"));
  EXPECT_EQ(reply.type, ProtocolCode::kHandshakeStatus);
  EXPECT_EQ(reply.meta.peer_ip, "172.21.25.20");
}

TEST(CodecCaptures, Test2ServicesReply) {
  Envelope m = decode(capture("test2_node4_services_reply.json"));
  EXPECT_EQ(m.type, ProtocolCode::kServicesAvailableReply);
  ASSERT_NE(m.services(), nullptr);
  EXPECT_EQ(*m.services(), ServiceCatalog::all());
  EXPECT_EQ(m.meta.bandwidth.raw, 0u);
  EXPECT_EQ(encode_services(*m.services()), R"({ "PRECIPITATION" : "RO", "PTU" : "RO", "WIND" : "RO" })");
}

TEST(CodecCaptures, Test3RealtimeData) {
  Envelope m = decode(capture("test3_node1_realtime_data.json"));
  EXPECT_EQ(m.type, ProtocolCode::kRealTimeDataReply);
  ASSERT_NE(m.data(), nullptr);
  EXPECT_EQ(*m.data(), testing::test3_data());
  EXPECT_EQ(m.data()->ptu->air_temperature.text(), "19.1");
  EXPECT_EQ(m.data()->ptu->relative_humidity.text(), "69.4");
  EXPECT_EQ(m.data()->ptu->air_pressure.text(), "1014.1");

  Envelope request = decode(capture("test3_node4_realtime_request.json"));
  EXPECT_EQ(request.type, ProtocolCode::kRealTimeData);
  EXPECT_EQ(format_timestamp(request.meta.timestamp), "2011-07-25T14:15:35Z");
}

TEST(CodecCaptures, CanonicalSizesMatchOracle) {
  for (const auto& c : kCaptures) {
    SCOPED_TRACE(c.file);
    Envelope m = decode(capture(c.file));
    EXPECT_TRUE(validate(m).empty());
    std::string bytes = encode(m);
    EXPECT_EQ(bytes.size(), c.canonical_bytes);
    EXPECT_EQ(decode(bytes), m);
  }
}

TEST(CodecCaptures, CanonicalFormDiffersOnlyByZone) {
  // The captures are already canonical apart from the missing "Z" and two
  // lost spaces in the Test 3 text.
  std::string original = capture("test1_node1_handshake.json");
  std::string expected = original;
  expected.insert(expected.find("16:51:29") + 8, "Z");
  EXPECT_EQ(encode(decode(original)), expected);
}

TEST(Codec, EncodeIsCanonical) {
  Envelope m;
  m.type = ProtocolCode::kServicesAvailable;
  m.meta = sample_meta();
  EXPECT_EQ(encode(m),
            "{ \"OpenWeatherMessage\" : { \"MetaInfo\" : { \"Bandwidth\" : 6, \"ID\" : "
            "\"33c11957579d1093e931bd540536b40e90339dbded8e2a2ce4e64c480c8132bc\", \"Keep-Alive\" : 120000, "
            "\"Location\" : \"6672224 385565 35V\", \"Peer-IP\" : \"172.21.25.16\", \"Peers-Requested\" : 20, "
            "\"Port\" : 62535, \"Timestamp\" : \"2011-07-20T16:51:29Z\", \"Update-Interval\" : 120000, "
            "\"Version\" : \"OpenWeather/1.0\" }, \"Type\" : 102 } }");
}

TEST(Codec, RetrieveRequestLayout) {
  Envelope m;
  m.type = ProtocolCode::kOnDemandData;
  m.meta = sample_meta();
  m.payload = RetrieveRequest{{Service::kPtu, Service::kWind, Service::kPrecipitation},
                              *parse_timestamp("2011-05-29T12:10:23Z")};
  EXPECT_EQ(encode_payload(m),
            R"({ "D" : [ "PTU", "WIND", "PRECIPITATION" ], "Timestamp" : "2011-05-29T12:10:23Z" })");
  EXPECT_EQ(decode(encode(m)), m);
}

TEST(Codec, DecodeAcceptsLegacySpellings) {
  std::string meta = R"("MetaInfo" : { "Bandwidth" : "6", "ID" : "33c11957579d1093e931bd540536b40e90339dbded8e2a2ce4e64c480c8132bc",
      "Keep-Alive" : 120000, "Location" : "6672224 385565 35V", "Peer-IP" : "172.21.25.16",
      "Peers-Request" : 20, "Port" : "62535", "Timestamp" : "2011-05-29T14:10:23+02:00",
      "Update-Interval" : 120000, "Version" : "OpenWeather/1.0" })";
  std::string text = R"({"OpenWeatherMessage":{"Type":"201",)" + meta +
                     R"(,"Data":{"Retrive":{"D":["PTU","WIND"],"Timestamp":"2011-05-29T12:10:23"}}}})";
  Envelope m = decode(text);
  EXPECT_EQ(m.type, ProtocolCode::kOnDemandData);
  EXPECT_EQ(m.meta.port, 62535);
  EXPECT_EQ(m.meta.bandwidth.raw, 6u);
  EXPECT_EQ(format_timestamp(m.meta.timestamp), "2011-05-29T12:10:23Z");
  ASSERT_NE(m.retrieve(), nullptr);
  EXPECT_EQ(m.retrieve()->services, (std::vector<Service>{Service::kPtu, Service::kWind}));
  EXPECT_EQ(format_timestamp(m.retrieve()->timestamp), "2011-05-29T12:10:23Z");
}

TEST(Codec, DecodeErrorsAreTyped) {
  try {
    decode("{ \"OpenWeatherMessage\" : ");
    FAIL() << "expected a parse error";
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.kind(), DecodeError::Kind::kParse);
    EXPECT_GT(e.offset(), 0u);
  }

  try {
    decode(R"({"Other":{}})");
    FAIL() << "expected a schema error";
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.kind(), DecodeError::Kind::kSchema);
  }

  std::string unknown = capture("test1_node1_handshake.json");
  unknown.replace(unknown.find("\"Type\" : 100"), 12, "\"Type\" : 999");
  try {
    decode(unknown);
    FAIL() << "expected an unknown-code error";
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.kind(), DecodeError::Kind::kUnknownCode);
  }

  std::string missing = capture("test1_node1_handshake.json");
  missing.replace(missing.find("\"Port\" : 62535, "), 16, "");
  EXPECT_THROW(decode(missing), DecodeError);
}

TEST(Codec, ValidateReportsPeersRequested) {
  Envelope m;
  m.type = ProtocolCode::kHandshake;
  m.meta = sample_meta();
  m.meta.peers_requested = 0;
  auto v = validate(m);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].message, "peers_requested below 1");
  m.meta.peers_requested = 101;
  EXPECT_EQ(validate(m).at(0).message, "peers_requested above 100");
  EXPECT_THROW(encode(m), EncodeError);
}

TEST(Codec, ValidateRequiresPayloadForRetrievalCodes) {
  Envelope m;
  m.type = ProtocolCode::kRealTimeDataReply;
  m.meta = sample_meta();
  auto v = validate(m);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].message, "payload missing for retrieval code");

  m.type = ProtocolCode::kHandshake;
  m.payload = testing::test3_data();
  EXPECT_EQ(validate(m).size(), 1u);
}

TEST(Codec, ValidateChecksHeaderFields) {
  Envelope m;
  m.type = ProtocolCode::kHandshake;
  m.meta = sample_meta();
  m.meta.id = NodeId{"33C1"};
  m.meta.peer_ip = "300.1.1.1";
  m.meta.port = 0;
  m.meta.location.zone = "35v";
  m.meta.keep_alive_ms = 0;
  m.meta.update_interval_ms = -1;
  m.meta.version = "OpenWeather/one";
  EXPECT_EQ(validate(m).size(), 7u);
}

TEST(Codec, ValidateChecksWeatherRanges) {
  Envelope m;
  m.type = ProtocolCode::kRealTimeDataReply;
  m.meta = sample_meta();
  WeatherData d = testing::test3_data();
  d.ptu->relative_humidity = *Decimal::parse("100.1");
  d.wind->speed.min = *Decimal::parse("2.0");
  m.payload = d;
  auto v = validate(m);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].field, "Data.PTU.Relative-Humidity");
  EXPECT_EQ(v[1].field, "Data.WIND.Speed");
}

TEST(Codec, PeerListingBounds) {
  Envelope m;
  m.type = ProtocolCode::kListPeersReply;
  m.meta = sample_meta();
  m.payload = InfoPayload{PeerListing{}};
  EXPECT_FALSE(validate(m).empty());

  testing::EnvelopeFactory f(3);
  PeerListing l;
  l.entries[NodeId{f.hex64()}] = PeerEntry{"172.21.25.20", 62535, BandwidthClass{6}};
  m.payload = InfoPayload{l};
  EXPECT_TRUE(validate(m).empty());
  EXPECT_EQ(decode(encode(m)), m);
}

TEST(Codec, RoundTripProperty) {
  testing::EnvelopeFactory f(20110725);
  for (int i = 0; i < 500; ++i) {
    Envelope m = f.next();
    ASSERT_TRUE(validate(m).empty()) << validate(m).front().field;
    std::string bytes = encode(m);
    Envelope back = decode(bytes);
    ASSERT_EQ(back, m) << bytes;
    ASSERT_EQ(encode(back), bytes);
  }
}

}  // namespace
}  // namespace owp
