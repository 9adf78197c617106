#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "pipemdp/errors.hpp"
#include "pipemdp/env_server.hpp"
#include "pipemdp/evaluator.hpp"
#include "socket_client.hpp"

using namespace pipemdp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json ask(Session& s, const json& req) { return json::parse(s.handle(req.dump())); }

std::string error_code(const json& reply) {
  return reply.contains("error") ? reply["error"]["code"].get<std::string>() : std::string();
}

Observation to_obs(const json& j) { return j.get<Observation>(); }

// Drives the reactive rule through any request/reply function; returns rewards.
template <class Ask>
std::vector<double> scripted_rm(Ask&& send, std::uint64_t seed, double age) {
  std::vector<double> rewards;
  json reply = send(json{{"op", "reset"}, {"seed", seed}, {"start_age", age}});
  REQUIRE_FALSE(reply.contains("error"));
  bool done = false;
  while (!done) {
    const auto a = rm_decide(to_obs(reply["obs"]));
    reply = send(json{{"op", "step"}, {"action", static_cast<int>(a)}});
    REQUIRE_FALSE(reply.contains("error"));
    rewards.push_back(reply["reward"].get<double>());
    done = reply["done"].get<bool>();
  }
  return rewards;
}

std::vector<double> in_process_rewards(std::uint64_t seed, double age) {
  const auto log = run_episode(RmPolicy{}, EnvConfig::defaults(), age, seed);
  std::vector<double> r;
  for (const auto& s : log.steps) r.push_back(s.reward.r);
  return r;
}

}  // namespace

TEST_CASE("spec reply") {
  Session s(EnvConfig::defaults(), nullptr);
  const auto r = ask(s, {{"op", "spec"}});
  CHECK(r["obs_dim"] == 13);
  CHECK(r["n_actions"] == 3);
  CHECK(r["decision_interval"] == 0.5);
  CHECK(r["horizon"] == 100.0);
  CHECK(r["n_segments"] == 40);
  CHECK(r["reward_normalizer"] == 136000.0);
}

TEST_CASE("reset and step replies") {
  Session s(EnvConfig::defaults(), nullptr);
  const auto r = ask(s, {{"op", "reset"}, {"seed", 42}, {"start_age", 30}});
  REQUIRE(r["obs"].size() == 13);
  CHECK(r["obs"][0] == 30.0);
  CHECK(r["info"]["age"] == 30.0);
  CHECK(r["info"]["elapsed"] == 0.0);
  double hsum = 0;
  for (int k = 1; k <= 6; ++k) hsum += r["obs"][k].get<double>();
  CHECK(hsum == doctest::Approx(1.0));

  const auto st = ask(s, {{"op", "step"}, {"action", 2}});
  CHECK(st["obs"][0] == 0.0);
  CHECK(st["obs"][1] == 1.0);
  CHECK(st["reward"].get<double>() == doctest::Approx(-24560.0 / 136000.0));
  CHECK(st["done"] == false);
  CHECK(st["info"]["c_r"] == -24560.0);
  CHECK(st["info"]["elapsed"] == 0.5);
  CHECK(ask(s, {{"op", "close"}})["closed"] == true);
  CHECK(s.closed());
}

TEST_CASE("protocol errors leave the session usable") {
  Session s(EnvConfig::defaults(), nullptr);
  CHECK(error_code(ask(s, {{"op", "step"}, {"action", 0}})) == "PROTOCOL");
  CHECK(error_code(json::parse(s.handle("{not json"))) == "PROTOCOL");
  CHECK(error_code(json::parse(s.handle("[1,2]"))) == "PROTOCOL");
  CHECK(error_code(ask(s, {{"op", "dance"}})) == "PROTOCOL");
  CHECK(error_code(ask(s, {{"op", "reset"}, {"seed", -4}})) == "CONFIG");
  CHECK(error_code(ask(s, {{"op", "reset"}, {"start_age", -1}})) == "CONFIG");
  CHECK(error_code(ask(s, {{"op", "reset"}, {"start_age", "old"}})) == "CONFIG");
  REQUIRE_FALSE(ask(s, {{"op", "reset"}, {"seed", 1}}).contains("error"));
  CHECK(error_code(ask(s, {{"op", "step"}, {"action", 3}})) == "PROTOCOL");
  CHECK(error_code(ask(s, {{"op", "step"}, {"action", 1.5}})) == "PROTOCOL");
  CHECK(error_code(ask(s, {{"op", "step"}})) == "PROTOCOL");
  CHECK(error_code(json::parse(s.handle("{\"op\":\"step\",\"action\":"))) == "PROTOCOL");
  CHECK_FALSE(ask(s, {{"op", "step"}, {"action", 0}}).contains("error"));
}

TEST_CASE("stepping past the end of an episode is refused") {
  Session s(EnvConfig::defaults(), nullptr);
  ask(s, {{"op", "reset"}, {"seed", 5}, {"start_age", 0}});
  json r;
  for (int t = 0; t < 200; ++t) r = ask(s, {{"op", "step"}, {"action", 0}});
  CHECK(r["done"] == true);
  CHECK(r["info"]["elapsed"] == 100.0);
  CHECK(error_code(ask(s, {{"op", "step"}, {"action", 0}})) == "PROTOCOL");
  CHECK_FALSE(ask(s, {{"op", "reset"}, {"seed", 5}}).contains("error"));
  CHECK_FALSE(ask(s, {{"op", "step"}, {"action", 0}}).contains("error"));
}

TEST_CASE("resetting with the same seed gives the same reply") {
  Session s(EnvConfig::defaults(), nullptr);
  const auto a = s.handle(R"({"op":"reset","seed":11})");
  s.handle(R"({"op":"step","action":0})");
  const auto b = s.handle(R"({"op":"reset","seed":11})");
  CHECK(a == b);
}

TEST_CASE("long scripted session") {
  Session s(EnvConfig::defaults(), nullptr);
  Rng rng(3);
  int steps = 0, resets = 0;
  json r = ask(s, {{"op", "reset"}, {"seed", 0}});
  while (steps < 1000) {
    r = ask(s, {{"op", "step"}, {"action", static_cast<int>(rng.next_u64() % 3)}});
    REQUIRE_FALSE(r.contains("error"));
    const double rew = r["reward"].get<double>();
    CHECK(rew <= 0.0);
    CHECK(rew >= -1.0);
    ++steps;
    if (r["done"].get<bool>()) {
      r = ask(s, {{"op", "reset"}});
      ++resets;
    }
  }
  CHECK(resets == 5);
}

TEST_CASE("stream transport session") {
  std::istringstream in(R"({"op":"spec"})"
                        "\n"
                        R"({"op":"reset","seed":1})"
                        "\r\n\n"
                        R"({"op":"close"})"
                        "\n"
                        R"({"op":"spec"})"
                        "\n");
  std::ostringstream out;
  StreamTransport t(in, out);
  serve_session(t, EnvConfig::defaults());
  std::istringstream replies(out.str());
  std::vector<json> lines;
  for (std::string l; std::getline(replies, l);) lines.push_back(json::parse(l));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].contains("obs_dim"));
  CHECK(lines[1].contains("obs"));
  CHECK(lines[2]["closed"] == true);
}

TEST_CASE("protocol episode reproduces the in-process rewards") {
  Session s(EnvConfig::defaults(), nullptr);
  for (std::uint64_t seed : {0u, 17u, 123456u}) {
    const auto wire = scripted_rm([&](const json& req) { return ask(s, req); }, seed, 50.0);
    CHECK(wire == in_process_rewards(seed, 50.0));
  }
}

TEST_CASE("socket endpoints") {
  const auto dir = fs::temp_directory_path() / ("pipemdp_srv_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  for (const std::string& endpoint : {"unix:" + (dir / "env.sock").string(), std::string("tcp:127.0.0.1:0")}) {
    CAPTURE(endpoint);
    EnvServer server(EnvConfig::defaults());
    const auto bound = server.bind(endpoint);
    if (endpoint.starts_with("tcp")) CHECK(bound != endpoint);
    std::thread loop([&] { server.run(); });
    {
      SocketClient a(bound), b(bound);
      const auto wire = scripted_rm([&](const json& req) { return a.ask(req); }, 8, 25.0);
      CHECK(wire == in_process_rewards(8, 25.0));
      CHECK(b.ask({{"op", "spec"}})["n_segments"] == 40);
      CHECK(a.ask({{"op", "close"}})["closed"] == true);
    }
    // an idle connection must not block shutdown
    SocketClient idle(bound);
    server.stop();
    loop.join();
  }
  CHECK_FALSE(fs::exists(dir / "env.sock"));
  fs::remove_all(dir);
}

TEST_CASE("bind failures") {
  EnvServer server(EnvConfig::defaults());
  CHECK_THROWS_AS(server.bind("udp:1234"), BindError);
  CHECK_THROWS_AS(server.bind("tcp:127.0.0.1:notaport"), BindError);
  CHECK_THROWS_AS(server.bind("unix:/nonexistent/dir/sock"), BindError);
  CHECK_THROWS_AS(server.run(), BindError);
  EnvServer first(EnvConfig::defaults());
  const auto bound = first.bind("tcp:127.0.0.1:0");
  EnvServer second(EnvConfig::defaults());
  CHECK_THROWS_AS(second.bind(bound), BindError);
}

TEST_CASE("recorded transcript replays identically") {
  const fs::path path = fs::path(PIPEMDP_FIXTURE_DIR) / "session_transcript.jsonl";
  std::ifstream in(path);
  REQUIRE(in.good());
  Session s(EnvConfig::defaults(), nullptr);
  int exchanges = 0;
  for (std::string req, reply; std::getline(in, req) && std::getline(in, reply);) {
    REQUIRE(req.rfind("> ", 0) == 0);
    REQUIRE(reply.rfind("< ", 0) == 0);
    CHECK(s.handle(req.substr(2)) == reply.substr(2));
    ++exchanges;
  }
  CHECK(exchanges >= 8);
}
