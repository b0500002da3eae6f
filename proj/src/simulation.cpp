#include "wayfind/simulation.hpp"

#include <cmath>
#include <limits>

#include "wayfind/error.hpp"

namespace wayfind {

namespace {

// A candidate point this close (along the axis) to a flight end counts as
// stepping onto that flight.
constexpr double kRampEntryDepthCm = 20.0;
constexpr int kSlideSubsteps = 4;

}  // namespace

World::World(BuildingSpec spec) : spec_(std::move(spec)), mesh_(build_navmesh(spec_)) {
  for (const auto& f : spec_.floors) walls_.emplace_back(f.id, wall_segments(spec_, f.id));
  for (const auto& link : mesh_.links()) {
    RampFrame r;
    const Vec3 lo = link.ramp[1];
    const Vec3 hi = link.ramp[link.ramp.size() - 2];
    r.a = lo.xy();
    r.length = distance(lo.xy(), hi.xy());
    r.u = (hi.xy() - lo.xy()) * (1.0 / r.length);
    r.n = {-r.u.y, r.u.x};
    r.half_width = 0.5 * link.width_cm;
    r.z0 = lo.z;
    r.z1 = hi.z;
    r.lower_floor = link.lower_floor;
    r.upper_floor = link.upper_floor;
    ramps_.push_back(r);
  }
}

const std::vector<WallSegment>& World::walls(int floor) const {
  for (const auto& [id, w] : walls_) {
    if (id == floor) return w;
  }
  throw ReferenceError("no walls for floor " + std::to_string(floor));
}

void validate_input(const InputFrame& in) {
  if (!std::isfinite(in.yaw) || !std::isfinite(in.pitch) || !std::isfinite(in.roll)) {
    throw InvalidArgument("input angles must be finite");
  }
  if (in.pitch < -kMaxPitchDeg || in.pitch > kMaxPitchDeg) {
    throw InvalidArgument("pitch outside [-89, 89]");
  }
}

std::vector<Assignment> default_protocol() {
  return {
      {1, "4.02", "4.99", GoalKind::room, "trigger_1", "Please find your way from Room 4.02 to Room 4.99."},
      {2, "4.99", "2.01", GoalKind::room, "trigger_2", "Please find your way from Room 4.99 to Room 2.01."},
      {3, "2.01", "4.64", GoalKind::room, "trigger_3", "Please find your way from Room 2.01 to Room 4.64."},
      {4, "4.64", "", GoalKind::any_exit, "trigger_4",
       "Please evacuate from Room 4.64 and find an exit on the first floor."},
  };
}

namespace {

void log_event(SessionState& s, std::string name, std::string detail = {}) {
  s.event_log.push_back({s.clock_ms, std::move(name), std::move(detail)});
}

void start_assignment(SessionState& s) {
  const Assignment& a = s.assignments[s.assignment_index];
  log_event(s, "assignment_start", std::to_string(a.id));
  if (a.goal_kind == GoalKind::any_exit && !s.alarm_active) {
    s.alarm_active = true;
    log_event(s, "alarm_on", kAlarmText);
  }
}

}  // namespace

void init_session(const World& world, double eye_height_cm, std::uint64_t seed, AgentState& agent,
                  SessionState& session, std::vector<Assignment> protocol) {
  if (!(eye_height_cm >= kMinEyeHeightCm && eye_height_cm <= kMaxEyeHeightCm)) {
    throw InvalidArgument("eye height must be within [120, 220] cm");
  }
  if (protocol.empty()) throw InvalidArgument("protocol has no assignments");
  const BuildingSpec& spec = world.spec();
  const Place start = lookup_place(spec, protocol.front().start_label);

  agent = AgentState{};
  agent.eye_height_cm = eye_height_cm;
  agent.floor = start.floor;
  agent.pos = {start.point.x, start.point.y, world.mesh().floor_z(start.floor) + eye_height_cm};
  const Zone* spawn = nullptr;
  for (const auto& z : spec.zones) {
    if (z.purpose == ZonePurpose::spawn) spawn = &z;
  }
  agent.yaw = spawn && spawn->yaw_deg ? wrap_degrees(*spawn->yaw_deg) : 0.0;

  session = SessionState{};
  session.assignments = std::move(protocol);
  session.rng_seed = seed;
  start_assignment(session);
}

namespace {

// Farthest t in [0, 1] with p + d*t contained, assuming p is contained.
double contact(const NavMesh& mesh, int floor, Vec2 p, Vec2 d) {
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 48; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mesh.contains(floor, p + d * mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// One blocked move. Candidates are the projection of the target and, from
// the contact point, the remainder of the step slid along each wall touched
// there. The contained candidate with the most forward progress wins; none
// is farther than |delta| from p.
Vec2 slide(const World& world, int floor, Vec2 p, Vec2 delta) {
  const NavMesh& mesh = world.mesh();
  const Vec2 q = p + delta;
  if (mesh.contains(floor, q)) return q;
  const double cap = norm(delta);

  Vec2 best = p;
  double best_score = 0.0;
  auto consider = [&](Vec2 c) {
    const double score = dot(c - p, delta);
    if (score > best_score && distance(c, p) <= cap && mesh.contains(floor, c)) {
      best = c;
      best_score = score;
    }
  };

  consider(mesh.project(floor, q));
  const double t0 = contact(mesh, floor, p, delta);
  const Vec2 c = p + delta * t0;
  consider(c);
  const Vec2 rest = delta * (1.0 - t0);
  for (const auto& w : world.walls(floor)) {
    if (distance_to_segment(c, w.seg) > 1e-3) continue;
    const Vec2 d = w.seg.b - w.seg.a;
    const double len = norm(d);
    if (len < 1e-9) continue;
    const Vec2 u = d * (1.0 / len);
    const Vec2 along = u * dot(rest, u);
    consider(c + along * contact(mesh, floor, c, along));
  }
  return best;
}

Vec2 move_on_floor(const World& world, AgentState& agent, Vec2 p, Vec2 delta) {
  const Vec2 q = p + delta;
  if (world.mesh().contains(agent.floor, q)) return q;

  const auto& ramps = world.ramps();
  for (std::size_t i = 0; i < ramps.size(); ++i) {
    const RampFrame& r = ramps[i];
    const double s = r.along(q);
    if (std::abs(r.lateral(q)) > r.half_width || s < 0.0 || s > r.length) continue;
    const bool at_lower = r.lower_floor == agent.floor && s <= kRampEntryDepthCm;
    const bool at_upper = r.upper_floor == agent.floor && r.length - s <= kRampEntryDepthCm;
    if (!at_lower && !at_upper) continue;
    agent.ramp = static_cast<int>(i);
    return q;
  }

  // Blocked: slide in substeps so the agent can round corners.
  Vec2 cur = p;
  const Vec2 sub = delta * (1.0 / kSlideSubsteps);
  for (int k = 0; k < kSlideSubsteps; ++k) cur = slide(world, agent.floor, cur, sub);
  return cur;
}

Vec2 move_on_ramp(const World& world, AgentState& agent, Vec2 p, Vec2 delta) {
  const RampFrame& r = world.ramps()[*agent.ramp];
  const Vec2 q = p + delta;
  double s = r.along(q);
  const double lat = std::clamp(r.lateral(q), -r.half_width, r.half_width);
  if (s < 0.0 || s > r.length) {
    const int exit_floor = s < 0.0 ? r.lower_floor : r.upper_floor;
    const Vec2 c = r.at(s, lat);
    if (world.mesh().contains(exit_floor, c)) {
      agent.ramp.reset();
      agent.floor = exit_floor;
      return c;
    }
    s = std::clamp(s, 0.0, r.length);
  }
  return r.at(s, lat);
}

}  // namespace

void step(const World& world, AgentState& agent, SessionState& session, const InputFrame& in, int dt_ms) {
  if (dt_ms != kTickMs) throw InvalidArgument("step requires dt_ms == 20");
  validate_input(in);
  agent.yaw = wrap_degrees(in.yaw);
  agent.pitch = in.pitch;
  agent.roll = in.roll;
  agent.moving = in.move_held;

  if (in.move_held) {
    const Vec2 delta = heading(agent.yaw) * (kSpeedCmPerS * dt_ms / 1000.0);
    const Vec2 p = agent.pos.xy();
    const Vec2 next = agent.ramp ? move_on_ramp(world, agent, p, delta) : move_on_floor(world, agent, p, delta);
    double ground_z;
    if (agent.ramp) {
      const RampFrame& r = world.ramps()[*agent.ramp];
      ground_z = r.z_at(std::clamp(r.along(next), 0.0, r.length));
      agent.floor = world.spec().floor_at_z(ground_z);
    } else {
      ground_z = world.mesh().floor_z(agent.floor);
    }
    agent.pos = {next.x, next.y, ground_z + agent.eye_height_cm};
  }

  session.clock_ms += dt_ms;
  ++session.tick;
  if (session.tick % kSampleEveryTicks == 0) evaluate_zone_entry(world, session, agent);
}

void evaluate_zone_entry(const World& world, SessionState& session, const AgentState& agent) {
  if (session.finished() || agent.ramp) return;
  const BuildingSpec& spec = world.spec();
  const Vec2 p = agent.pos.xy();

  // The next assignment's trigger surrounds the active goal, so only zones
  // two or more steps ahead count as out-of-order entries.
  const int n = static_cast<int>(session.assignments.size());
  for (int j = session.assignment_index + 2; j < n; ++j) {
    const std::string& id = session.assignments[j].trigger_zone;
    const Zone* z = spec.find_zone(id);
    if (!z) continue;
    const bool inside = z->floor == agent.floor && z->contains(p);
    if (inside && session.blocked_inside.insert(id).second) log_event(session, "trigger_blocked", id);
    if (!inside) session.blocked_inside.erase(id);
  }

  const Assignment& a = session.assignments[session.assignment_index];
  std::optional<std::string> exit_label;
  bool reached = false;
  if (a.goal_kind == GoalKind::room) {
    const RoomDef* room = spec.find_room(a.goal_label);
    if (!room) throw UnknownLabel("unknown goal room " + a.goal_label);
    reached = room->floor == agent.floor && distance(room->door, p) <= kGoalRadiusCm;
  } else {
    for (const auto& z : spec.zones) {
      if (z.purpose == ZonePurpose::exit && z.floor == agent.floor && z.contains(p)) {
        exit_label = z.id.rfind("exit_", 0) == 0 ? z.id.substr(5) : z.id;
        reached = true;
        break;
      }
    }
  }
  if (!reached) return;

  log_event(session, "assignment_complete", std::to_string(a.id));
  if (exit_label) log_event(session, "exit_reached", *exit_label);
  ++session.assignment_index;
  session.blocked_inside.clear();
  if (session.finished()) {
    log_event(session, "session_finished");
  } else {
    start_assignment(session);
  }
}

std::string GazeHit::label() const {
  if (target_kind == "none") return "none";
  if (target_kind == "wall") return "wall:" + surface_id;
  return target_kind + ":" + target_id;
}

GazeHit gaze_raycast(const World& world, const AgentState& agent) {
  GazeHit none;
  none.target_kind = "none";
  if (agent.ramp) return none;

  const Vec2 origin = agent.pos.xy();
  const Vec2 dir = heading(agent.yaw);
  const double cos_p = std::cos(deg2rad(agent.pitch));
  const double tan_p = std::tan(deg2rad(agent.pitch));
  const double max_t = kGazeRangeCm * cos_p;  // horizontal reach

  const WallSegment* best = nullptr;
  double best_t = std::numeric_limits<double>::infinity();
  for (const auto& w : world.walls(agent.floor)) {
    const auto t = ray_segment(origin, dir, w.seg);
    if (t && *t < best_t) {
      best_t = *t;
      best = &w;
    }
  }
  if (!best || best_t > max_t) return none;

  const double floor_z = world.mesh().floor_z(agent.floor);
  const double hit_z = agent.pos.z + tan_p * best_t;
  if (hit_z < floor_z || hit_z > floor_z + world.spec().story_height_cm) return none;

  GazeHit h;
  const Vec2 hp = origin + dir * best_t;
  h.point = {hp.x, hp.y, hit_z};
  h.surface_id = best->surface_id;
  h.distance_cm = best_t / cos_p;
  h.target_kind = "wall";
  const Decal* door = nullptr;
  const Decal* sign = nullptr;
  for (const auto& d : best->decals) {
    if (distance(d.center, hp) > d.half_width) continue;
    if (d.kind == "room_door") {
      if (!door) door = &d;
    } else if (!sign) {
      sign = &d;
    }
  }
  if (const Decal* d = sign ? sign : door) {
    h.target_kind = d->kind;
    h.target_id = d->id;
  }
  return h;
}

bool on_walkable(const World& world, Vec3 ground, double tol) {
  const BuildingSpec& spec = world.spec();
  const int f = spec.floor_at_z(ground.z);
  if (std::abs(world.mesh().floor_z(f) - ground.z) <= tol && !world.mesh().cells_at(f, ground.xy(), tol).empty()) {
    return true;
  }
  for (const auto& r : world.ramps()) {
    const double s = r.along(ground.xy());
    if (s < -tol || s > r.length + tol || std::abs(r.lateral(ground.xy())) > r.half_width + tol) continue;
    if (std::abs(r.z_at(std::clamp(s, 0.0, r.length)) - ground.z) <= tol) return true;
  }
  return false;
}

}  // namespace wayfind
