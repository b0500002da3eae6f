#include "wayfind/agents.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "wayfind/error.hpp"

namespace wayfind {

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::central_point: return "central_point";
    case PolicyKind::direction: return "direction";
    case PolicyKind::floor: return "floor";
    case PolicyKind::nearest_exit: return "nearest_exit";
  }
  return "unknown";
}

PolicyKind policy_kind_from(std::string_view name) {
  for (PolicyKind k : {PolicyKind::central_point, PolicyKind::direction, PolicyKind::floor, PolicyKind::nearest_exit}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown policy '" + std::string(name) + "'");
}

namespace {

// Single-staircase routes pay a short floor-3 traverse between flights, so
// near-ties are judged within 3%.
constexpr double kTieBand = 1.03;

PathOptions route_options(std::optional<std::string> staircase = std::nullopt, bool allow_stairs = true) {
  PathOptions o;
  o.clearance_cm = kPolicyClearanceCm;
  o.allow_stairs = allow_stairs;
  o.staircase = std::move(staircase);
  return o;
}

Place landing_on(const Staircase& s, int floor) {
  for (const auto& f : s.flights) {
    if (f.upper_floor == floor) return {floor, f.upper_landing()};
    if (f.lower_floor == floor) return {floor, f.lower_landing()};
  }
  throw ReferenceError("staircase " + s.label + " does not serve floor " + std::to_string(floor));
}

double stair_x(const Staircase& s) {
  double x = 0.0;
  for (const auto& f : s.flights) x += f.lower_mouth().x + f.upper_mouth().x;
  return x / (2.0 * static_cast<double>(s.flights.size()));
}

bool serves(const Staircase& s, int floor) {
  return std::any_of(s.flights.begin(), s.flights.end(),
                     [floor](const Flight& f) { return f.lower_floor == floor || f.upper_floor == floor; });
}

/// Staircase whose landing on `at.floor` is closest to `at` by walking distance.
const Staircase& nearest_stair(const World& world, const Place& at) {
  const Staircase* best = nullptr;
  double best_len = std::numeric_limits<double>::infinity();
  for (const auto& s : world.spec().staircases) {
    if (!serves(s, at.floor)) continue;
    const double len = world.mesh().path(at, landing_on(s, at.floor), route_options({}, false)).length_cm;
    if (len < best_len) {
      best_len = len;
      best = &s;
    }
  }
  if (!best) throw Unreachable("no staircase serves floor " + std::to_string(at.floor));
  return *best;
}

void append(const World& world, Route& r, const PathResult& p) {
  for (std::size_t i = 0; i < p.waypoints.size(); ++i) {
    const Vec3 w = p.waypoints[i];
    if (!r.points.empty() && distance(r.points.back(), w) < 1e-9) {
      if (p.on_stair[i]) r.fixed.back() = true;
      continue;
    }
    r.points.push_back(w);
    r.floor.push_back(p.waypoint_floor[i]);
    r.fixed.push_back(p.on_stair[i]);
  }
  for (int li : p.links_used) {
    const std::string& label = world.mesh().links()[li].staircase;
    if (r.staircases.empty() || r.staircases.back() != label) r.staircases.push_back(label);
  }
}

double distance_to_polygon(const Polygon& poly, Vec2 p) {
  if (point_in_polygon(poly, p)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    d = std::min(d, distance_to_segment(p, {poly[i], poly[(i + 1) % poly.size()]}));
  }
  return d;
}

/// Id of the main corridor nearest to p on its floor.
std::string main_corridor_of(const World& world, int floor, Vec2 p) {
  std::string best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& w : world.spec().floor(floor).walkable) {
    if (w.kind != "main_corridor") continue;
    const double d = distance_to_polygon(w.polygon, p);
    if (d < best_d) {
      best_d = d;
      best = w.id;
    }
  }
  return best;
}

bool segment_walkable(const NavMesh& mesh, int floor, Vec2 a, Vec2 b) {
  const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / 5.0)));
  for (int k = 0; k <= n; ++k) {
    if (!mesh.contains(floor, a + (b - a) * (static_cast<double>(k) / n))) return false;
  }
  return true;
}

Route jitter(const World& world, const Route& in, double noise, std::mt19937_64& rng) {
  Route sub = in;
  sub.points.clear();
  sub.floor.clear();
  sub.fixed.clear();
  for (std::size_t i = 0; i < in.points.size(); ++i) {
    sub.points.push_back(in.points[i]);
    sub.floor.push_back(in.floor[i]);
    sub.fixed.push_back(in.fixed[i]);
    if (i + 1 == in.points.size() || in.floor[i] != in.floor[i + 1] || (in.fixed[i] && in.fixed[i + 1])) continue;
    const Vec3 a = in.points[i], b = in.points[i + 1];
    const int pieces = static_cast<int>(std::ceil(distance(a, b) / kNoiseSpacingCm));
    for (int k = 1; k < pieces; ++k) {
      sub.points.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
      sub.floor.push_back(in.floor[i]);
      sub.fixed.push_back(false);
    }
  }

  std::uniform_real_distribution<double> offset(-noise, noise);
  Route out = sub;
  const NavMesh& mesh = world.mesh();
  for (std::size_t i = 1; i + 1 < sub.points.size(); ++i) {
    const double u = offset(rng);
    if (sub.fixed[i] || sub.floor[i - 1] != sub.floor[i] || sub.floor[i + 1] != sub.floor[i]) continue;
    const Vec2 dir = sub.points[i + 1].xy() - out.points[i - 1].xy();
    const double len = norm(dir);
    if (len < 1e-9) continue;
    const Vec2 nrm{-dir.y / len, dir.x / len};
    const Vec2 c = sub.points[i].xy() + nrm * u;
    const int f = sub.floor[i];
    if (segment_walkable(mesh, f, out.points[i - 1].xy(), c) && segment_walkable(mesh, f, c, sub.points[i + 1].xy())) {
      out.points[i] = {c.x, c.y, sub.points[i].z};
    }
  }
  return out;
}

void finish(Route& r) {
  if (!r.fixed.empty()) {
    r.fixed.front() = true;
    r.fixed.back() = true;
  }
  r.length_cm = polyline_length(r.points);
}

Route via(const World& world, const Place& from, const Place& mid, const Place& to) {
  Route r;
  append(world, r, world.mesh().path(from, mid, route_options()));
  append(world, r, world.mesh().path(mid, to, route_options()));
  return r;
}

Route direct(const World& world, const Place& from, const Place& to, std::optional<std::string> staircase = {}) {
  Route r;
  append(world, r, world.mesh().path(from, to, route_options(std::move(staircase), from.floor != to.floor)));
  return r;
}

Place central_place(const World& world) {
  for (const auto& z : world.spec().zones) {
    if (z.purpose == ZonePurpose::central_point) {
      const Vec2 c = centroid(z.polygon);
      return {z.floor, {c.x, c.y, world.mesh().floor_z(z.floor)}};
    }
  }
  throw ReferenceError("building has no central_point zone");
}

/// Centroid of the cross corridor on `floor` nearest to x, restricted to
/// those strictly ahead in direction `sign` when sign != 0.
std::optional<Place> cross_corridor(const World& world, int floor, double x, int sign, bool wide_only) {
  std::optional<Place> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& w : world.spec().floor(floor).walkable) {
    const bool wide = w.kind == "wide_intersection";
    if (!wide && (wide_only || w.kind != "cross_corridor")) continue;
    const Vec2 c = centroid(w.polygon);
    if (sign != 0 && (c.x - x) * sign <= 0.0) continue;
    const double d = std::abs(c.x - x);
    if (d < best_d) {
      best_d = d;
      best = Place{floor, {c.x, c.y, world.mesh().floor_z(floor)}};
    }
  }
  return best;
}

Place exit_place(const World& world, const std::string& label) { return lookup_place(world.spec(), "Exit " + label); }

Route plan_room(const PolicySpec& policy, const World& world, const Place& from, const Place& goal) {
  const bool same_floor = from.floor == goal.floor;
  switch (policy.kind) {
    case PolicyKind::direction: {
      if (same_floor) {
        const bool switch_needed = main_corridor_of(world, from.floor, from.point.xy()) !=
                                   main_corridor_of(world, goal.floor, goal.point.xy());
        const int sign = goal.point.x >= from.point.x ? 1 : -1;
        if (switch_needed) {
          if (auto c = cross_corridor(world, from.floor, from.point.x, sign, false)) return via(world, from, *c, goal);
        }
        return direct(world, from, goal);
      }
      return direct(world, from, goal, nearest_stair(world, goal).label);
    }
    case PolicyKind::floor:
      if (same_floor) return direct(world, from, goal);
      return direct(world, from, goal, nearest_stair(world, from).label);
    case PolicyKind::central_point: {
      const Place c = central_place(world);
      if (same_floor && from.floor != c.floor) {
        if (auto w = cross_corridor(world, from.floor, goal.point.x, 0, true)) return via(world, from, *w, goal);
        return direct(world, from, goal);
      }
      return via(world, from, c, goal);
    }
    case PolicyKind::nearest_exit: {
      if (same_floor) return direct(world, from, goal);
      // Shortest route; near-ties go to the staircase nearest the midpoint.
      const double best = world.mesh().path(from, goal, route_options()).length_cm;
      const double mid_x = 0.5 * (from.point.x + goal.point.x);
      std::optional<std::string> pick;
      double pick_d = std::numeric_limits<double>::infinity();
      for (const auto& s : world.spec().staircases) {
        if (!serves(s, from.floor) || !serves(s, goal.floor)) continue;
        const double len = world.mesh().path(from, goal, route_options(s.label)).length_cm;
        const double d = std::abs(stair_x(s) - mid_x);
        if (len <= kTieBand * best && d < pick_d) {
          pick_d = d;
          pick = s.label;
        }
      }
      return direct(world, from, goal, pick);
    }
  }
  throw InvalidArgument("unhandled policy");
}

Route plan_evacuation(const PolicySpec& policy, const World& world, const Place& from) {
  const BuildingSpec& spec = world.spec();
  switch (policy.kind) {
    case PolicyKind::nearest_exit: {
      const std::string label = nearest_exit(world, from);
      Route r = direct(world, from, exit_place(world, label));
      r.exit = label;
      return r;
    }
    case PolicyKind::floor: {
      const std::string stair = nearest_stair(world, from).label;
      std::string label;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& e : spec.exits) {
        const double len = world.mesh().path(from, exit_place(world, e.label), route_options(stair)).length_cm;
        if (len < best) {
          best = len;
          label = e.label;
        }
      }
      Route r = direct(world, from, exit_place(world, label), stair);
      r.exit = label;
      return r;
    }
    case PolicyKind::direction: {
      const ExitDef* pick = nullptr;
      for (const auto& e : spec.exits) {
        if (!pick || std::abs(e.position.x - from.point.x) < std::abs(pick->position.x - from.point.x)) pick = &e;
      }
      if (!pick) throw ReferenceError("building has no exits");
      const Place goal = exit_place(world, pick->label);
      Route r = direct(world, from, goal, nearest_stair(world, goal).label);
      r.exit = pick->label;
      return r;
    }
    case PolicyKind::central_point: {
      const Place c = central_place(world);
      const std::string label = nearest_exit(world, c);
      Route r = via(world, from, c, exit_place(world, label));
      r.exit = label;
      return r;
    }
  }
  throw InvalidArgument("unhandled policy");
}

}  // namespace

std::string nearest_exit(const World& world, const Place& from) {
  std::string best;
  double best_len = std::numeric_limits<double>::infinity();
  std::vector<const ExitDef*> exits;
  for (const auto& e : world.spec().exits) exits.push_back(&e);
  std::sort(exits.begin(), exits.end(), [](const ExitDef* a, const ExitDef* b) { return a->label < b->label; });
  for (const ExitDef* e : exits) {
    const double len = world.mesh().path(from, exit_place(world, e->label), route_options()).length_cm;
    if (len < best_len) {
      best_len = len;
      best = e->label;
    }
  }
  if (best.empty()) throw Unreachable("no reachable exit");
  return best;
}

Route plan_route(const PolicySpec& policy, const World& world, const Assignment& assignment, const Place& from,
                 std::mt19937_64* rng) {
  if (!(policy.waypoint_noise_cm >= 0.0 && policy.waypoint_noise_cm <= kMaxWaypointNoiseCm)) {
    throw InvalidArgument("waypoint noise must be within [0, 100] cm");
  }
  Route r = assignment.goal_kind == GoalKind::any_exit
                ? plan_evacuation(policy, world, from)
                : plan_room(policy, world, from, lookup_place(world.spec(), assignment.goal_label));
  finish(r);
  if (rng && policy.waypoint_noise_cm > 0.0) {
    r = jitter(world, r, policy.waypoint_noise_cm, *rng);
    finish(r);
  }
  return r;
}

InputFrame RouteFollower::next(const AgentState& agent) {
  const Vec3 g = agent.ground();
  auto radius = [&](std::size_t i) {
    const bool stair = route_.fixed[i] && i > 0 && i + 1 < route_.points.size();
    return stair ? kStairArrivalRadiusCm : kArrivalRadiusCm;
  };
  while (!done() && distance(g, route_.points[index_]) <= radius(index_)) ++index_;
  InputFrame f;
  f.yaw = agent.yaw;
  if (done()) return f;
  const Vec3 t = route_.points[index_];
  f.yaw = wrap_degrees(rad2deg(std::atan2(t.y - g.y, t.x - g.x)));
  f.move_held = true;
  return f;
}

SessionRun run_session(const World& world, const PolicySpec& policy, const std::string& participant,
                       double eye_height_cm, std::uint64_t seed, std::uint64_t max_ticks, LogWriter* writer) {
  SessionRun run;
  run.policy = policy;
  Recorder rec(world, participant, eye_height_cm, seed);
  if (writer) rec.attach(writer);
  std::mt19937_64 rng(policy.jitter_seed);
  int planned_for = -1;
  RouteFollower follower;
  while (!rec.finished() && rec.session().tick < max_ticks) {
    const SessionState& s = rec.session();
    if (s.assignment_index != planned_for) {
      planned_for = s.assignment_index;
      const Place from{rec.agent().floor, rec.agent().ground()};
      Route r = plan_route(policy, world, s.assignments[s.assignment_index], from, &rng);
      run.routes.push_back(r);
      follower = RouteFollower(std::move(r));
    }
    rec.step(follower.next(rec.agent()));
  }
  run.finished = rec.finished();
  run.log = rec.log();
  run.trace = rec.trace();
  return run;
}

std::vector<SessionRun> generate_cohort(const World& world, int n, const std::vector<PolicySpec>& mix,
                                        std::uint64_t base_seed) {
  if (n < 1) throw InvalidArgument("cohort size must be at least 1");
  if (mix.empty()) throw InvalidArgument("policy mix is empty");
  std::vector<SessionRun> out(static_cast<std::size_t>(n));
  const unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(), static_cast<unsigned>(n)));
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (int i = static_cast<int>(w); i < n; i += static_cast<int>(workers)) {
        PolicySpec p = mix[static_cast<std::size_t>(i) % mix.size()];
        p.jitter_seed = base_seed + static_cast<std::uint64_t>(i);
        char id[32];
        std::snprintf(id, sizeof id, "P%03d", i + 1);
        out[static_cast<std::size_t>(i)] = run_session(world, p, id, 170.0, p.jitter_seed);
      }
    }));
  }
  for (auto& j : jobs) j.get();
  for (const auto& r : out) {
    if (!r.finished) throw Error("session " + r.log.participant_id + " did not finish");
  }
  return out;
}

}  // namespace wayfind
