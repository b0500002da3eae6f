#include <numeric>

#include "doctest.h"
#include "support.hpp"

#include "wayfind/agents.hpp"
#include "wayfind/analysis.hpp"
#include "wayfind/error.hpp"

using namespace wayfind;
namespace fs = std::filesystem;

namespace {

const World& world() { return testing::fixture_world(); }

const SessionRun& direction_run() {
  static const SessionRun r = run_session(world(), {PolicyKind::direction, 1, 0.0}, "D1", 170.0, 1);
  return r;
}

const SessionRun& floor_run() {
  static const SessionRun r = run_session(world(), {PolicyKind::floor, 2, 30.0}, "F1", 170.0, 2);
  return r;
}

PathOptions clearance() {
  PathOptions o;
  o.clearance_cm = kPolicyClearanceCm;
  return o;
}

Route route_from(const PathResult& p) {
  Route r;
  r.points = p.waypoints;
  r.floor = p.waypoint_floor;
  r.fixed = p.on_stair;
  r.fixed.front() = r.fixed.back() = true;
  r.length_cm = p.length_cm;
  return r;
}

// Session that follows `policy` for the room assignments and then walks the
// shortest path to a chosen exit.
SessionLog evacuate_via(const std::string& exit, std::uint64_t seed) {
  const World& w = world();
  Recorder rec(w, "X" + std::to_string(seed), 170.0, seed);
  std::mt19937_64 rng(seed);
  const PolicySpec policy{PolicyKind::direction, seed, 30.0};
  int planned = -1;
  RouteFollower f;
  while (!rec.finished()) {
    const SessionState& s = rec.session();
    if (s.assignment_index != planned) {
      planned = s.assignment_index;
      const Place from{rec.agent().floor, rec.agent().ground()};
      const Assignment& a = s.assignments[s.assignment_index];
      f = RouteFollower(a.goal_kind == GoalKind::any_exit
                            ? route_from(w.mesh().path(from, lookup_place(w.spec(), "Exit " + exit), clearance()))
                            : plan_route(policy, w, a, from, &rng));
    }
    rec.step(f.next(rec.agent()));
    REQUIRE(rec.session().tick < 200000);
  }
  return rec.log();
}

std::size_t gaze_hits(const std::vector<SessionLog>& logs) {
  std::size_t n = 0;
  for (const auto& l : logs) {
    for (const auto& s : l.samples) n += s.gaze.has_value();
  }
  return n;
}

}  // namespace

TEST_CASE("splits partition a complete session") {
  const SessionLog& log = direction_run().log;
  const auto splits = split_by_assignment(log, world().spec());
  REQUIRE(splits.size() == 4);
  std::vector<TelemetrySample> joined;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& s = splits[i];
    CHECK(s.assignment == static_cast<int>(i) + 1);
    CHECK(s.complete);
    CHECK(s.samples.front().t_ms == s.start_ms);
    CHECK(s.eye_height_cm == doctest::Approx(170.0));
    joined.insert(joined.end(), s.samples.begin(), s.samples.end());
  }
  CHECK(joined == log.samples);
  for (const auto& e : log.events) {
    if (e.name != "assignment_start") continue;
    const int k = std::stoi(e.detail);
    CHECK(splits[static_cast<std::size_t>(k - 1)].samples.front().t_ms == e.t_ms);
  }
}

TEST_CASE("a truncated log keeps its complete splits") {
  const SessionLog& full = direction_run().log;
  std::int64_t cut = 0;
  for (const auto& e : full.events) {
    if (e.name == "assignment_start" && e.detail == "3") cut = e.t_ms + 5000;
  }
  REQUIRE(cut > 0);
  SessionLog log = full;
  log.samples.erase(std::remove_if(log.samples.begin(), log.samples.end(),
                                   [&](const TelemetrySample& s) { return s.t_ms > cut; }),
                    log.samples.end());
  log.events.erase(std::remove_if(log.events.begin(), log.events.end(), [&](const Event& e) { return e.t_ms > cut; }),
                   log.events.end());
  const auto splits = split_by_assignment(log, world().spec());
  REQUIRE(splits.size() == 3);
  CHECK(splits[0].complete);
  CHECK(splits[1].complete);
  CHECK_FALSE(splits[2].complete);
  CHECK(splits[2].end_ms == cut);
  CHECK(time_spent(splits).size() == 2);
}

TEST_CASE("corrupt event sequences are rejected") {
  SessionLog log = direction_run().log;
  SUBCASE("missing start") {
    log.events.erase(std::find_if(log.events.begin(), log.events.end(),
                                  [](const Event& e) { return e.name == "assignment_start" && e.detail == "2"; }));
    CHECK_THROWS_AS(split_by_assignment(log, world().spec()), ParseError);
  }
  SUBCASE("event between samples") {
    for (auto& e : log.events) {
      if (e.name == "assignment_complete" && e.detail == "1") e.t_ms += 40;
    }
    CHECK_THROWS_AS(split_by_assignment(log, world().spec()), ParseError);
  }
}

TEST_CASE("time spent") {
  AssignmentSplit s;
  s.assignment = 1;
  s.start_ms = 0;
  s.end_ms = 160300;
  s.complete = true;
  CHECK(time_spent({s}).at(1) == doctest::Approx(160.3));

  const auto splits = split_by_assignment(direction_run().log, world().spec());
  const CohortTimes c = cohort_time_spent({splits, splits, splits});
  CHECK(c.total.n == 3);
  CHECK(c.total.sd == 0.0);
  for (const auto& [k, st] : c.per_assignment) CHECK(st.sd == 0.0);

  const Stat d = describe({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(d.mean == doctest::Approx(5.0));
  CHECK(d.sd == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(describe({3.0}).sd == 0.0);
}

TEST_CASE("zero-noise travel time matches the planned path") {
  const SessionRun& run = direction_run();
  const Route& r = run.routes.at(0);
  const std::size_t n = r.points.size();
  REQUIRE(distance(r.points[n - 1], r.points[n - 2]) > kGoalRadiusCm);
  // The assignment completes on entering the goal radius around the door.
  const double expected = (r.length_cm - kGoalRadiusCm) / kSpeedCmPerS;
  const double got = time_spent(split_by_assignment(run.log, world().spec())).at(1);
  CHECK(std::abs(got - expected) <= 0.2);
}

TEST_CASE("strategy classification") {
  SUBCASE("floor policy") {
    const auto splits = split_by_assignment(floor_run().log, world().spec());
    const StrategyLabel l = classify_strategy(splits[1], world());
    CHECK(l.label == StrategyKind::floor);
    REQUIRE(l.h_star);
    CHECK(*l.h_star <= 0.3);
    CHECK(l.detour_ratio >= 0.98);
  }
  SUBCASE("direction policy") {
    const auto splits = split_by_assignment(direction_run().log, world().spec());
    const StrategyLabel l = classify_strategy(splits[1], world());
    CHECK(l.label == StrategyKind::direction);
    REQUIRE(l.h_star);
    CHECK(*l.h_star >= 0.7);
  }
  SUBCASE("straight corridor walk") {
    AssignmentSplit s;
    s.assignment = 1;
    s.eye_height_cm = 170.0;
    const double z = world().mesh().floor_z(4) + 170.0;
    for (int i = 0; i <= 50; ++i) {
      TelemetrySample t;
      t.t_ms = 100 * i;
      t.x_cm = 1000 + 14.0 * i;
      t.z_cm = z;
      t.assignment = 1;
      s.samples.push_back(t);
    }
    s.end_ms = 5000;
    s.complete = true;
    const StrategyLabel l = classify_strategy(s, world());
    CHECK(l.label == StrategyKind::mixed);
    CHECK(l.detour_ratio == doctest::Approx(1.0).epsilon(0.02));
    CHECK_FALSE(l.h_star);
  }
  SUBCASE("session label") {
    StrategyLabel c, d, f;
    c.label = StrategyKind::central_point;
    d.label = StrategyKind::direction;
    f.label = StrategyKind::floor;
    CHECK(session_strategy({{2, d}, {3, c}}) == StrategyKind::central_point);
    CHECK(session_strategy({{2, f}, {3, f}}) == StrategyKind::floor);
    CHECK(session_strategy({{2, d}, {3, f}}) == StrategyKind::direction);
  }
}

TEST_CASE("choice tally") {
  SUBCASE("reference dataset with an even exit split") {
    std::vector<SessionLog> logs;
    for (std::uint64_t i = 0; i < 18; ++i) {
      logs.push_back(evacuate_via("C", 100 + i));
      logs.push_back(evacuate_via("D", 200 + i));
    }
    const ChoiceTally t = choice_tally(logs, world());
    CHECK(t.completed == 36);
    CHECK(t.excluded == 0);
    for (const auto& [label, n] : t.exits) CHECK(n == (label == "C" || label == "D" ? 18 : 0));
    int sum = 0;
    for (const auto& [label, n] : t.exits) sum += n;
    CHECK(sum == t.completed);
    const std::string nearest = nearest_exit(world(), lookup_place(world().spec(), "4.64"));
    CHECK(t.nearest_agreement == 18);
    CHECK(t.nearest_exit_agreement == doctest::Approx(0.5));
    CHECK(((nearest == "C") || (nearest == "D")));
  }
  SUBCASE("nearest-exit agents always agree") {
    const auto runs = generate_cohort(world(), 4, {{PolicyKind::nearest_exit, 0, 30.0}}, 7);
    std::vector<SessionLog> logs;
    for (const auto& r : runs) logs.push_back(r.log);
    CHECK(choice_tally(logs, world()).nearest_exit_agreement == 1.0);
  }
  SUBCASE("incomplete logs are excluded") {
    SessionLog cut = floor_run().log;
    cut.samples.resize(cut.samples.size() / 2);
    cut.events.erase(std::remove_if(cut.events.begin(), cut.events.end(),
                                    [&](const Event& e) { return e.t_ms > cut.samples.back().t_ms; }),
                     cut.events.end());
    const ChoiceTally t = choice_tally({cut, floor_run().log}, world());
    CHECK(t.completed == 1);
    CHECK(t.excluded == 1);
  }
  SUBCASE("empty set") {
    const ChoiceTally t = choice_tally({}, world());
    CHECK(t.completed == 0);
    CHECK(t.exits.size() == world().spec().exits.size());
    for (const auto& [label, n] : t.exits) CHECK(n == 0);
    for (const auto& [label, n] : t.staircases) CHECK(n == 0);
    CHECK(t.nearest_exit_agreement == 0.0);
  }
}

TEST_CASE("staircases used follow the route") {
  const SessionRun& run = floor_run();
  const auto splits = split_by_assignment(run.log, world().spec());
  for (std::size_t k = 0; k < splits.size(); ++k) {
    CAPTURE(k);
    auto used = staircases_used(splits[k], world());
    auto planned = run.routes[k].staircases;
    planned.erase(std::unique(planned.begin(), planned.end()), planned.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    CHECK(used == planned);
  }
}

TEST_CASE("gaze heatmap conserves hits") {
  std::vector<SessionLog> logs{direction_run().log, floor_run().log};
  std::int64_t total = 0;
  for (const auto& f : world().spec().floors) {
    const HeatmapGrid g = gaze_heatmap(logs, world().spec(), f.id);
    CHECK(g.counts.size() == static_cast<std::size_t>(g.nx) * g.ny);
    for (auto c : g.counts) CHECK(c >= 0);
    total += g.total();
  }
  CHECK(total == static_cast<std::int64_t>(gaze_hits(logs)));

  for (double cell : {10.0, 37.0, 200.0}) {
    std::int64_t t = 0;
    for (const auto& f : world().spec().floors) t += gaze_heatmap({direction_run().log}, world().spec(), f.id, cell).total();
    CHECK(t == static_cast<std::int64_t>(gaze_hits({direction_run().log})));
  }
  CHECK_THROWS_AS(gaze_heatmap(logs, world().spec(), 4, 9.0), InvalidArgument);
  CHECK_THROWS_AS(gaze_heatmap(logs, world().spec(), 4, 201.0), InvalidArgument);
}

TEST_CASE("staring at an exit sign") {
  const World& w = world();
  const WallSegment* wall = nullptr;
  const Decal* sign = nullptr;
  int floor = 0;
  for (const auto& f : w.spec().floors) {
    for (const auto& seg : w.walls(f.id)) {
      for (const auto& d : seg.decals) {
        if (!sign && d.kind == "exit_sign") {
          wall = &seg;
          sign = &d;
          floor = f.id;
        }
      }
    }
  }
  REQUIRE(sign);
  AgentState agent;
  SessionState session;
  init_session(w, 170.0, 1, agent, session);
  const Vec2 dir = wall->seg.b - wall->seg.a;
  Vec2 n = Vec2{-dir.y, dir.x} * (1.0 / norm(dir));
  Vec2 p = sign->center + n * 150.0;
  if (!w.mesh().contains(floor, p)) p = sign->center - n * 150.0;
  agent.floor = floor;
  agent.pos = {p.x, p.y, w.mesh().floor_z(floor) + 170.0};
  const double yaw = rad2deg(std::atan2(sign->center.y - p.y, sign->center.x - p.x));

  SessionLog log;
  for (int tick = 1; tick <= 500; ++tick) {
    step(w, agent, session, {false, yaw, 0.0, 0.0});
    if (session.tick % kSampleEveryTicks == 0) log.samples.push_back(sample(agent, session, gaze_raycast(w, agent)));
  }
  CHECK(gaze_target_tally({log})[1]["exit_sign"] >= 100);
}

TEST_CASE("speed statistics") {
  std::vector<TelemetrySample> moving, still;
  for (int i = 0; i <= 100; ++i) {
    TelemetrySample s;
    s.t_ms = 100 * i;
    still.push_back(s);
    s.x_cm = 14.0 * i;
    moving.push_back(s);
  }
  const SpeedStats m = speed_stats(moving);
  CHECK(m.mean == doctest::Approx(140.0));
  CHECK(m.max == doctest::Approx(140.0));
  CHECK(std::accumulate(m.histogram.begin(), m.histogram.end(), std::int64_t{0}) == 100);
  CHECK(m.histogram.back() == 100);
  CHECK(speed_stats(still).mean == 0.0);
  CHECK(speed_stats(still).histogram.front() == 100);
  CHECK_THROWS_AS(speed_stats({moving[0]}), InvalidArgument);

  for (const auto* run : {&direction_run(), &floor_run()}) CHECK(speed_stats(run->log.samples).max <= 140.0 + 1e-6);
}

TEST_CASE("analysis files") {
  const fs::path out = testing::scratch_dir("analysis_out");
  write_analysis({direction_run().log, floor_run().log}, world(), out);
  for (const char* name : {"time_spent.csv", "strategies.csv", "choices.csv", "gaze_targets.csv"}) {
    CAPTURE(name);
    CHECK(fs::file_size(out / name) > 0);
  }
  for (const auto& f : world().spec().floors) CHECK(fs::exists(out / ("heatmap_floor" + std::to_string(f.id) + ".csv")));
}
