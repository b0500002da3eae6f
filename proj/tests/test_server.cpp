#include <thread>

#include "doctest.h"
#include "support.hpp"

#include "wayfind/agents.hpp"
#include "wayfind/server.hpp"

using namespace wayfind;
namespace fs = std::filesystem;

namespace {

const World& world() { return testing::fixture_world(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json hello(const std::string& id, const std::string& clock = "lockstep", std::uint64_t seed = 5) {
  return {{"type", "hello"}, {"participant_id", id}, {"eye_height_cm", 170.0}, {"seed", seed}, {"clock", clock}};
}

Json input(const std::string& token, const InputFrame& f, std::optional<std::uint64_t> ticks = 1) {
  Json j{{"type", "input"}, {"token", token},      {"move_held", f.move_held},
         {"yaw_deg", f.yaw}, {"pitch_deg", f.pitch}, {"roll_deg", f.roll}};
  if (ticks) j["ticks"] = *ticks;
  return j;
}

std::vector<Json> of_type(const std::vector<Json>& msgs, const std::string& type) {
  std::vector<Json> out;
  for (const auto& m : msgs) {
    if (m["type"] == type) out.push_back(m);
  }
  return out;
}

// Scripted nearest-exit session; its trace is what a client would send.
const SessionRun& scripted() {
  static const SessionRun r = run_session(world(), {PolicyKind::nearest_exit, 3, 20.0}, "ref", 170.0, 5);
  return r;
}

// Consecutive identical frames folded into (frame, ticks) pairs.
std::vector<std::pair<InputFrame, std::uint64_t>> batched(const std::vector<InputFrame>& frames) {
  std::vector<std::pair<InputFrame, std::uint64_t>> out;
  for (const auto& f : frames) {
    if (!out.empty() && out.back().first == f && out.back().second < ServerSession::kMaxTicksPerInput) {
      ++out.back().second;
    } else {
      out.push_back({f, 1});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("hello spawns at the first room") {
  SessionStore store(testing::scratch_dir("server_hello"));
  ServerSession s(world(), store, 1);
  const auto out = s.handle(hello("p1"));
  REQUIRE(out.size() == 1);
  const Json& spawn = out[0];
  CHECK(spawn["type"] == "spawn");
  CHECK_FALSE(spawn["token"].get<std::string>().empty());
  CHECK(spawn["fixture_hash"] == world().spec().hash);
  const Place start = lookup_place(world().spec(), "4.02");
  CHECK(spawn["pos"]["x"].get<double>() == start.point.x);
  CHECK(spawn["pos"]["y"].get<double>() == start.point.y);
  CHECK(spawn["pos"]["z"].get<double>() == doctest::Approx(start.point.z + 170.0));
  CHECK(spawn["assignment"]["id"] == 1);
  CHECK(spawn["assignment"]["message"] == "Please find your way from Room 4.02 to Room 4.99.");
  CHECK(s.spawned());
  CHECK(s.lockstep());
}

TEST_CASE("protocol violations end the session") {
  SessionStore store(testing::scratch_dir("server_violations"));
  auto expect_violation = [](const std::vector<Json>& out, const std::string& message) {
    REQUIRE(out.size() == 2);
    CHECK(out[0]["type"] == "error");
    CHECK(out[0]["message"].get<std::string>().find(message) != std::string::npos);
    CHECK(out[1] == Json{{"type", "end"}, {"reason", "protocol violation"}});
  };
  ServerSession s(world(), store, 1);

  SUBCASE("input before hello") {
    expect_violation(s.handle(input("x", {true, 0, 0, 0})), "not spawned");
    CHECK(s.done());
    CHECK(s.handle(hello("p1")).empty());
    CHECK_FALSE(s.record());
  }
  SUBCASE("bad token") {
    s.handle(hello("p1"));
    expect_violation(s.handle(input("nope", {true, 0, 0, 0})), "bad session token");
    REQUIRE(s.record());
    CHECK(s.record()->status == SessionStatus::aborted);
  }
  SUBCASE("duplicate hello") {
    s.handle(hello("p1"));
    expect_violation(s.handle(hello("p1")), "duplicate hello");
  }
  SUBCASE("malformed json") { expect_violation(s.handle_line("{\"type\": "), "malformed"); }
  SUBCASE("unknown type") { expect_violation(s.handle_line(R"({"type": "teleport"})"), "teleport"); }
  SUBCASE("eye height out of range") {
    Json h = hello("p1");
    h["eye_height_cm"] = 90.0;
    expect_violation(s.handle(h), "eye_height_cm");
  }
  SUBCASE("ticks with the realtime clock") {
    const std::string token = s.handle(hello("p1", "realtime"))[0]["token"];
    CHECK(s.handle(input(token, {true, 0, 0, 0}, std::nullopt)).empty());
    expect_violation(s.handle(input(token, {true, 0, 0, 0}, 3)), "lockstep");
  }
  SUBCASE("too many ticks") {
    const std::string token = s.handle(hello("p1"))[0]["token"];
    expect_violation(s.handle(input(token, {true, 0, 0, 0}, 501)), "ticks");
  }
  SUBCASE("pitch out of range") {
    const std::string token = s.handle(hello("p1"))[0]["token"];
    expect_violation(s.handle(input(token, {true, 0, 95.0, 0})), "pitch");
  }
}

TEST_CASE("a lockstep session runs to the exit and is persisted") {
  const fs::path dir = testing::scratch_dir("server_full");
  SessionStore store(dir);
  ServerSession s(world(), store, 1);
  const std::string token = s.handle(hello("walker"))[0]["token"];
  std::vector<Json> out;
  for (const auto& [f, n] : batched(scripted().trace.frames)) {
    for (auto& m : s.handle(input(token, f, n))) out.push_back(std::move(m));
  }
  REQUIRE(s.done());
  REQUIRE_FALSE(out.empty());

  const Json& end = out.back();
  CHECK(end["type"] == "end");
  const std::string exit = end["exit_label"];
  CHECK((exit == "C" || exit == "D"));

  const auto messages = of_type(out, "message");
  REQUIRE(messages.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(messages[i]["text"] == default_protocol()[i + 1].message);
  const auto alarms = of_type(out, "alarm");
  REQUIRE(alarms.size() == 1);
  CHECK(alarms[0]["text"].get<std::string>() ==
        "Attention, please leave the building using the emergency exits as indicated. Do not use the elevators.");

  const auto states = of_type(out, "state");
  for (std::size_t i = 0; i < states.size(); ++i) CHECK(states[i]["t_ms"] == 100 * (i + 1));

  // Same seed and inputs as the scripted run: identical telemetry.
  const SessionLog log = parse_log(dir / "participant_walker.csv");
  REQUIRE(log.samples.size() == scripted().log.samples.size());
  for (std::size_t i = 0; i < log.samples.size(); ++i) CHECK(log.samples[i] == quantize(scripted().log.samples[i]));
  CHECK(log.events == scripted().log.events);
  CHECK(fs::exists(dir / "participant_walker.trace.csv"));
  CHECK(fs::is_empty(store.live_dir()));

  const auto idx = store.index();
  REQUIRE(idx.size() == 1);
  CHECK(idx[0].participant_id == "walker");
  CHECK(idx[0].file_stem == "walker");
  CHECK(idx[0].status == SessionStatus::finished);
  CHECK(idx[0].seed == 5);
  CHECK(idx[0].fixture_hash == world().spec().hash);
  CHECK(slurp(dir / "sessions.csv").rfind(std::string(kSessionsIndexHeader) + "\n", 0) == 0);

  // Later input is ignored.
  CHECK(s.handle(input(token, {true, 0, 0, 0})).empty());
}

TEST_CASE("an aborted session keeps its partial files") {
  const fs::path dir = testing::scratch_dir("server_abort");
  SessionStore store(dir);
  ServerSession s(world(), store, 1);
  const std::string token = s.handle(hello("quitter"))[0]["token"];
  s.handle(input(token, {true, 0, 0, 0}, 500));
  const auto out = s.abort("client disconnected");
  REQUIRE(out.size() == 1);
  CHECK(out[0]["reason"] == "client disconnected");
  CHECK(s.abort("again").empty());

  const fs::path partial = dir / "participant_quitter.csv.partial";
  REQUIRE(fs::exists(partial));
  CHECK_FALSE(fs::exists(dir / "participant_quitter.csv"));
  const SessionLog log = parse_log_text(slurp(partial));
  CHECK(log.samples.size() >= 100);
  CHECK(log.samples.back().t_ms == 10000);
  const auto idx = store.index();
  REQUIRE(idx.size() == 1);
  CHECK(idx[0].status == SessionStatus::aborted);
  CHECK(idx[0].log_path.filename() == "participant_quitter.csv.partial");
}

TEST_CASE("repeated participant ids get suffixed file stems") {
  const fs::path dir = testing::scratch_dir("server_suffix");
  SessionStore store(dir);
  for (int i = 0; i < 3; ++i) {
    ServerSession s(world(), store, 1);
    s.handle(hello("dup"));
    s.abort("done");
  }
  const auto idx = store.index();
  REQUIRE(idx.size() == 3);
  CHECK(idx[0].file_stem == "dup");
  CHECK(idx[1].file_stem == "dup_2");
  CHECK(idx[2].file_stem == "dup_3");
  for (const auto& r : idx) CHECK(r.participant_id == "dup");
  // A fresh store over the same directory does not reuse stems.
  SessionStore again(dir);
  CHECK(again.reserve("dup") == "dup_4");
  CHECK_THROWS(again.reserve("../etc"));
}

TEST_CASE("tcp transport") {
  ServerOptions opt;
  opt.out_dir = testing::scratch_dir("server_tcp");
  opt.idle_timeout_s = 5.0;
  Server server(world(), opt);
  const int port = server.start();
  REQUIRE(port > 0);
  std::thread loop([&] { server.run(); });

  SUBCASE("a full scripted walkthrough") {
    LineClient c("127.0.0.1", port);
    c.send(hello("net"));
    const auto spawn = c.receive();
    REQUIRE(spawn);
    REQUIRE((*spawn)["type"] == "spawn");
    const std::string token = (*spawn)["token"];
    std::vector<Json> out;
    std::thread reader([&] {
      while (auto m = c.receive(10.0)) {
        out.push_back(*m);
        if ((*m)["type"] == "end") break;
      }
    });
    for (const auto& [f, n] : batched(scripted().trace.frames)) c.send(input(token, f, n));
    reader.join();
    REQUIRE_FALSE(out.empty());
    CHECK(out.back()["type"] == "end");
    CHECK(out.back().contains("exit_label"));
    CHECK(of_type(out, "alarm").size() == 1);
  }
  SUBCASE("a dropped connection is persisted as partial") {
    {
      LineClient c("127.0.0.1", port);
      c.send(hello("drop"));
      const std::string token = (*c.receive())["token"];
      c.send(input(token, {true, 0, 0, 0}, 100));
      REQUIRE(c.receive());  // first state
    }
    for (int i = 0; i < 100 && server.store().index().empty(); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    const auto idx = server.store().index();
    REQUIRE(idx.size() == 1);
    CHECK(idx[0].status == SessionStatus::aborted);
    CHECK(fs::exists(idx[0].log_path));
  }
  SUBCASE("concurrent clients") {
    constexpr int kClients = 4;
    std::vector<std::thread> clients;
    std::vector<int> states(kClients, 0);
    for (int k = 0; k < kClients; ++k) {
      clients.emplace_back([&, k] {
        LineClient c("127.0.0.1", port);
        c.send(hello("same"));
        const std::string token = (*c.receive())["token"];
        for (int i = 0; i < 20; ++i) {
          c.send(input(token, {true, 90.0 * k, 0, 0}, 5));
          if (auto m = c.receive(); m && (*m)["type"] == "state") ++states[static_cast<std::size_t>(k)];
        }
      });
    }
    for (auto& t : clients) t.join();
    for (int n : states) CHECK(n == 20);
    for (int i = 0; i < 100 && server.store().index().size() < kClients; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    const auto idx = server.store().index();
    REQUIRE(idx.size() == kClients);
    std::set<std::string> stems;
    for (const auto& r : idx) stems.insert(r.file_stem);
    CHECK(stems == std::set<std::string>{"same", "same_2", "same_3", "same_4"});
  }
  SUBCASE("realtime clock advances on its own") {
    LineClient c("127.0.0.1", port);
    c.send(hello("rt", "realtime"));
    const std::string token = (*c.receive())["token"];
    c.send(input(token, {true, 0, 0, 0}, std::nullopt));
    auto m = c.receive(2.0);
    REQUIRE(m);
    CHECK((*m)["type"] == "state");
    CHECK((*m)["t_ms"] == 100);
  }

  server.stop();
  loop.join();
}

TEST_CASE("replay document") {
  const SessionLog& log = scripted().log;
  const Json doc = replay_document(log, world().spec().hash);
  CHECK(doc["format"] == "wayfind-replay/1");
  CHECK(doc["fixture_hash"] == world().spec().hash);
  CHECK(doc["participant_id"] == "ref");
  REQUIRE(doc["trajectory"].size() == log.samples.size());
  CHECK(doc["trajectory"][0]["t_ms"] == 0);
  CHECK(doc["trajectory"].back()["t_ms"] == log.samples.back().t_ms);
  std::size_t hits = 0;
  for (const auto& s : log.samples) hits += s.gaze.has_value();
  CHECK(doc["gaze"].size() == hits);
  CHECK(doc["events"].size() == log.events.size());
  CHECK(doc["events"][0] == Json{{"t_ms", 0}, {"event", "assignment_start"}, {"detail", "1"}});
}
