#include "openweather/scenario.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "openweather/codec.hpp"
#include "openweather/errors.hpp"
#include "test_support.hpp"

namespace owp {
namespace {

Scenario four_nodes() { return Scenario::load(std::string(OWP_SCENARIOS) + "/four_nodes.txt"); }

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return Scenario::parse(in);
}

std::vector<const TraceEvent*> sends_between(const std::vector<TraceEvent>& trace, std::int64_t from,
                                              std::int64_t to) {
  std::vector<const TraceEvent*> out;
  for (const auto& e : trace) {
    if (e.kind == TraceKind::kSend && e.time_ms >= from && e.time_ms < to) out.push_back(&e);
  }
  return out;
}

TEST(Scenario, ParsesFourNodes) {
  Scenario s = four_nodes();
  EXPECT_EQ(format_timestamp(s.epoch), "2011-07-25T14:15:35Z");
  EXPECT_EQ(s.until_ms, 5000);
  ASSERT_EQ(s.nodes.size(), 4u);
  EXPECT_EQ(s.links.size(), 3u);
  EXPECT_EQ(s.commands.size(), 5u);
  const ScenarioNode* n4 = s.node("n4");
  ASSERT_NE(n4, nullptr);
  EXPECT_EQ(n4->config.bandwidth.raw, 0u);
  EXPECT_EQ(n4->ip, "172.21.25.40");
  EXPECT_EQ(s.node("n1")->config.location.str(), "6672224 385565 35V");
}

TEST(Scenario, FourNodeTrace) {
  Simulation sim(four_nodes());
  const auto& trace = sim.run();

  // Every operation is one request and one reply.
  for (auto [from, to] : {std::pair{0, 500}, {500, 1000}, {1000, 2000}, {2000, 4000}}) {
    EXPECT_EQ(sends_between(trace, from, to).size(), 2u) << from;
  }
  auto stream = sends_between(trace, 4000, 5000);
  ASSERT_EQ(stream.size(), 2u);
  EXPECT_EQ(stream[0]->type, 200);
  const TraceEvent& data = *stream[1];
  EXPECT_EQ(data.type, 300);
  EXPECT_EQ(data.node, "n1");
  EXPECT_EQ(data.peer, "n4");
  EXPECT_EQ(data.bytes, 814u);
  EXPECT_EQ(data.tx_ms, 117);
  EXPECT_EQ(data.arrival_ms, data.time_ms + 117 + 20);

  std::map<int, std::size_t> sizes;
  for (const auto& e : trace) {
    if (e.kind == TraceKind::kSend) sizes[e.type] = e.bytes;
  }
  EXPECT_EQ(sizes[100], 375u);
  EXPECT_EQ(sizes[101], 375u);
  EXPECT_EQ(sizes[102], 375u);
  EXPECT_EQ(sizes[103], 458u);
  EXPECT_EQ(sizes[200], 375u);

  for (const char* a : {"n1", "n2", "n3", "n4"}) {
    for (const char* b : {"n1", "n2", "n3", "n4"}) {
      if (const Session* s = sim.session(a, b)) {
        EXPECT_TRUE(s->established()) << a << b;
      }
    }
  }
  EXPECT_EQ(sim.session("n1", "n4")->state, SessionState::kStreaming);
  EXPECT_TRUE(sim.session("n4", "n1")->stream_active);
  EXPECT_EQ(sim.engine("n1").peers().size(), 2u);

  std::string last_app;
  for (const auto& e : trace) {
    if (e.kind == TraceKind::kApp && e.node == "n4") last_app = e.detail;
  }
  EXPECT_EQ(last_app, "realtime 2011-07-25T14:15:39Z " + encode_data(testing::test3_data()));
}

TEST(Scenario, Deterministic) {
  auto render = [] {
    Scenario s = parse(
        "until 20000\n"
        "node a seed=9 rain=0.4 interval=1000\n"
        "node b seed=10\n"
        "link a b latency_ms=7 bandwidth=64000 loss=0.1\n"
        "at 0 b handshake a\n"
        "at 500 b stream a\n"
        "at 15000 b stop a\n");
    Simulation sim(std::move(s));
    std::string out;
    for (const auto& e : sim.run()) out += format_trace(e) + "\n";
    return out;
  };
  std::string first = render();
  EXPECT_EQ(first, render());
  EXPECT_NE(first.find("lost"), std::string::npos);
}

TEST(Scenario, FetchAndPeers) {
  Scenario s = parse(
      "epoch 2011-07-25T14:15:35Z\n"
      "node a seed=1\n"
      "node b seed=2\n"
      "node c seed=3\n"
      "link a b latency_ms=5\n"
      "link c b latency_ms=5\n"
      "at 0 a handshake b\n"
      "at 100 c handshake b\n"
      "at 3500 a fetch b +3000 PTU,WIND\n"
      "at 3600 a fetch b 2011-07-25T14:15:36Z PTU\n"
      "at 3700 a peers b\n");
  Simulation sim(std::move(s));
  const auto& trace = sim.run();
  std::vector<std::string> app;
  for (const auto& e : trace) {
    if (e.kind == TraceKind::kApp && e.node == "a") app.push_back(e.detail);
  }
  ASSERT_EQ(app.size(), 3u);
  EXPECT_EQ(app[0].rfind("on-demand 2011-07-25T14:15:38Z { \"PTU\"", 0), 0u) << app[0];
  EXPECT_EQ(app[0].find("PRECIPITATION"), std::string::npos);
  EXPECT_EQ(app[1], "error 601 ERROR-SAMPLE-NOT-FOUND");
  EXPECT_EQ(app[2], "peers 1");
}

TEST(Scenario, KeepAliveCloses) {
  Scenario s = parse(
      "node a seed=1 keep_alive=2000\n"
      "node b seed=2 keep_alive=2000\n"
      "link a b latency_ms=5\n"
      "at 0 a handshake b\n"
      "at 6000 a discover b\n");
  Simulation sim(std::move(s));
  EXPECT_THROW(sim.run(), ScenarioError);
  bool closed = false;
  for (const auto& e : sim.trace()) closed |= e.kind == TraceKind::kClose;
  EXPECT_TRUE(closed);
  EXPECT_EQ(sim.session("a", "b")->state, SessionState::kClosed);
}

TEST(Scenario, ParseErrorsCarryLine) {
  auto line_of = [](const std::string& text) -> std::string {
    try {
      parse(text);
    } catch (const ScenarioError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(line_of("node a\nnode a\n").find("line 2"), std::string::npos);
  EXPECT_NE(line_of("node a bogus=1\n").find("line 1"), std::string::npos);
  EXPECT_NE(line_of("node a\nlink a z\n").find("line 2"), std::string::npos);
  EXPECT_NE(line_of("node a\nnode b\nlink a b\nat 0 a dance b\n").find("line 4"), std::string::npos);
  EXPECT_NE(line_of("node a interval=10\n").find("line 1"), std::string::npos);
  EXPECT_NE(line_of("frobnicate\n").find("line 1"), std::string::npos);
  EXPECT_THROW(Scenario::load("/nonexistent/scenario.txt"), ScenarioError);
}

TEST(Scenario, TraceFormat) {
  TraceEvent e{4074, TraceKind::kSend, "n1", "n4", 3, 300, 814, 117, 4211, ""};
  EXPECT_EQ(format_trace(e), "    4074 ms  send n1 -> n4 conn=3 type=300 REAL-TIME-DATA-R bytes=814 tx_ms=117 arrive=4211");
  e.arrival_ms = -1;
  EXPECT_EQ(format_trace(e).substr(format_trace(e).size() - 4), "lost");
}

}  // namespace
}  // namespace owp
