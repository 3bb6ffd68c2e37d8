#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include "ipps/protocol.hpp"
#include "ipps/instance_io.hpp"
#include "ipps/tcp.hpp"
#include "oracles.hpp"

using namespace ipps;
using nlohmann::json;

namespace {

InstanceSpec toy() { return load_instance(oracle::data_path("toy.json")); }

int gid(const Session& s, int job, int id) {
  return s.encoder().op_id({job, *s.environment().spec().jobs[job].position_of(id)});
}

json act(long long seq, int op, int m) { return {{"type", "act"}, {"seq", seq}, {"pair", {op, m}}}; }
json wait(long long seq) { return {{"type", "act"}, {"seq", seq}, {"wait", true}}; }

}  // namespace

TEST(Protocol, SnapshotRoundTrip) {
  Session session(Environment(load_instance(oracle::data_path("or_branch.json"))));
  const auto msg = session.reset();
  const auto text = msg.dump();
  const auto back = snapshot_from_message(json::parse(text));
  GraphEncoder enc(session.environment());
  EXPECT_EQ(back, enc.encode(*session.state()));
}

TEST(Protocol, ScriptedOptimalToyEpisode) {
  Session s{Environment(toy(), RewardConfig::naive())};
  EXPECT_EQ(s.hello()["schema"], 1);
  EXPECT_EQ(s.reset()["seq"], 0);
  auto r = s.handle(act(0, gid(s, 0, 1), 0));
  ASSERT_EQ(r[0]["type"], "state");
  r = s.handle(act(1, gid(s, 1, 3), 1));
  ASSERT_EQ(r[0]["type"], "state");
  EXPECT_TRUE(r[0]["mask"]["wait"].get<bool>());
  r = s.handle(wait(2));
  r = s.handle(act(3, gid(s, 0, 2), 1));
  ASSERT_EQ(r[0]["type"], "terminal");
  EXPECT_EQ(r[0]["makespan"], 3);
  EXPECT_EQ(r[0]["schedule"].size(), 3u);
  EXPECT_TRUE(validate_schedule(toy(), schedule_from_json(toy(), r[0]["schedule"])).feasible);
}

TEST(Protocol, StaleSequenceIsRejected) {
  Session s{Environment(toy())};
  s.reset();
  const auto r = s.handle(act(5, gid(s, 0, 1), 0));
  EXPECT_EQ(r[0]["type"], "error");
  EXPECT_EQ(r[0]["code"], "stale-seq");
}

TEST(Protocol, PrunedOrBusyPairIsUnknown) {
  const auto spec = load_instance(oracle::data_path("or_branch.json"));
  Session s{Environment(spec)};
  s.reset();
  s.handle(act(0, gid(s, 0, 1), 0));
  s.handle(wait(1));
  s.handle(act(2, gid(s, 0, 3), 1));
  // Op 2 was on the other OR branch.
  const auto r = s.handle(act(3, gid(s, 0, 2), 0));
  EXPECT_EQ(r[0]["code"], "unknown-pair");
  EXPECT_FALSE(s.active());
  EXPECT_EQ(s.handle(act(3, gid(s, 1, 1), 0))[0]["code"], "no-episode");
  EXPECT_EQ(s.handle({{"type", "reset"}})[0]["type"], "state");
}

TEST(Protocol, SchemaMismatch) {
  Session s{Environment(toy())};
  s.reset();
  auto m = act(0, gid(s, 0, 1), 0);
  m["schema"] = 2;
  EXPECT_EQ(s.handle(m)[0]["code"], "schema-mismatch");
}

TEST(Protocol, RandomClientOverStreams) {
  // A random legal client drives 100 episodes through the stdio loop.
  const auto spec = load_instance(oracle::data_path("or_branch.json"));
  Session server{Environment(spec)};
  Rng rng(5);
  int episodes = 0, feasible = 0;
  auto client = [&](const json& msg) -> std::optional<json> {
    if (msg["type"] == "terminal") {
      ++episodes;
      feasible += validate_schedule(spec, schedule_from_json(spec, msg["schedule"])).feasible;
      if (episodes == 100) return json{{"type", "bye"}};
      return json{{"type", "reset"}};
    }
    if (msg["type"] != "state") return std::nullopt;
    const auto& pairs = msg["mask"]["pairs"];
    const std::size_t n = pairs.size() + (msg["mask"]["wait"].get<bool>() ? 1 : 0);
    const std::size_t k = uniform_index(rng, n);
    if (k == pairs.size()) return wait(msg["seq"]);
    return json{{"type", "act"}, {"seq", msg["seq"]}, {"pair", pairs[k]}};
  };
  std::optional<std::string> pending;
  const int done = serve_lines(
      server, [&]() -> std::optional<std::string> { return std::exchange(pending, std::nullopt); },
      [&](const std::string& line) {
        auto reply = client(json::parse(line));
        if (reply) pending = reply->dump();
        return true;
      });
  EXPECT_EQ(done, 100);
  EXPECT_EQ(episodes, 100);
  EXPECT_EQ(feasible, 100);
}

TEST(Protocol, TcpTransport) {
  Session server{Environment(toy(), RewardConfig::naive())};
  TcpListener listener(0);
  const int port = listener.port();
  int finished = -1;
  std::thread t([&] { finished = serve_tcp(server, listener); });
  SocketLines conn(tcp_connect(port));
  auto hello = json::parse(*conn.read_line());
  EXPECT_EQ(hello["type"], "hello");
  auto state = json::parse(*conn.read_line());
  EXPECT_EQ(state["type"], "state");
  const auto& ops = hello["operations"];
  auto id_of = [&](int job, int op) {
    for (const auto& o : ops)
      if (o["job"] == job && o["op"] == op) return o["id"].get<int>();
    return -1;
  };
  conn.write_line(act(0, id_of(0, 1), 0).dump());
  conn.read_line();
  conn.write_line(act(1, id_of(1, 3), 1).dump());
  conn.read_line();
  conn.write_line(wait(2).dump());
  conn.read_line();
  conn.write_line(act(3, id_of(0, 2), 1).dump());
  auto term = json::parse(*conn.read_line());
  EXPECT_EQ(term["type"], "terminal");
  EXPECT_EQ(term["makespan"], 3);
  conn.write_line(R"({"type":"bye"})");
  t.join();
  EXPECT_EQ(finished, 1);
}

TEST(Protocol, StreamTransportHandlesGarbage) {
  Session server{Environment(toy())};
  std::istringstream in("not json\n{\"type\":\"bye\"}\n");
  std::ostringstream out;
  serve_stream(server, in, out);
  std::istringstream lines(out.str());
  std::string l;
  std::vector<std::string> types;
  while (std::getline(lines, l)) types.push_back(json::parse(l)["type"]);
  EXPECT_EQ(types, (std::vector<std::string>{"hello", "state", "error"}));
}
