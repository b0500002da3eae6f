#pragma once

// Fixed-tick kinematic simulation of one participant.
//
// Movement is heading-steered: while the move input is held the agent walks
// at exactly kSpeedCmPerS along its yaw, and each tick's displacement is
// projected back onto the walkable set (wall sliding). Stair flights are
// straight strips between two floor edges; an agent on a strip has its z
// interpolated along the flight.
//
// The protocol state machine runs on sample ticks only (every
// kSampleEveryTicks), so every event shares its timestamp with a logged row.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wayfind/building.hpp"
#include "wayfind/navmesh.hpp"

namespace wayfind {

inline constexpr int kTickMs = 20;
inline constexpr int kSampleEveryTicks = 5;
inline constexpr int kSampleMs = kTickMs * kSampleEveryTicks;
inline constexpr double kSpeedCmPerS = 140.0;
inline constexpr double kGoalRadiusCm = 80.0;
inline constexpr double kGazeRangeCm = 3000.0;
inline constexpr double kMinEyeHeightCm = 120.0;
inline constexpr double kMaxEyeHeightCm = 220.0;
inline constexpr double kMaxPitchDeg = 89.0;
inline constexpr const char* kAlarmText =
    "Attention, please leave the building using the emergency exits as indicated. Do not use the elevators.";

/// Plan-view frame of a flight strip, mouth to mouth.
struct RampFrame {
  Vec2 a;  // lower mouth
  Vec2 u;  // unit axis towards the upper mouth
  Vec2 n;  // unit normal (left of u)
  double length = 0.0;
  double half_width = 0.0;
  double z0 = 0.0;  // ground z at the lower mouth
  double z1 = 0.0;
  int lower_floor = 0;
  int upper_floor = 0;

  double along(Vec2 p) const { return dot(p - a, u); }
  double lateral(Vec2 p) const { return dot(p - a, n); }
  Vec2 at(double s, double lat) const { return a + u * s + n * lat; }
  double z_at(double s) const { return z0 + (z1 - z0) * (s / length); }
};

/// Immutable building context shared by any number of sessions.
class World {
 public:
  explicit World(BuildingSpec spec);

  const BuildingSpec& spec() const { return spec_; }
  const NavMesh& mesh() const { return mesh_; }
  const std::vector<WallSegment>& walls(int floor) const;
  /// Indexed like mesh().links().
  const std::vector<RampFrame>& ramps() const { return ramps_; }

 private:
  BuildingSpec spec_;
  NavMesh mesh_;
  std::vector<std::pair<int, std::vector<WallSegment>>> walls_;
  std::vector<RampFrame> ramps_;
};

struct AgentState {
  Vec3 pos;  // eye position
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  double eye_height_cm = 170.0;
  bool moving = false;
  int floor = 0;
  std::optional<int> ramp;  // stair link index while on a flight

  Vec3 ground() const { return {pos.x, pos.y, pos.z - eye_height_cm}; }
};

struct InputFrame {
  bool move_held = false;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  bool operator==(const InputFrame&) const = default;
};

/// Throws InvalidArgument for non-finite angles or pitch outside [-89, 89].
void validate_input(const InputFrame& in);

enum class GoalKind { room, any_exit };

struct Assignment {
  int id = 0;
  std::string start_label;
  std::string goal_label;
  GoalKind goal_kind = GoalKind::room;
  std::string trigger_zone;
  std::string message;
};

/// The four-assignment protocol: 4.02 -> 4.99 -> 2.01 -> 4.64 -> any exit.
std::vector<Assignment> default_protocol();

struct Event {
  std::int64_t t_ms = 0;
  std::string name;
  std::string detail;

  bool operator==(const Event&) const = default;
};

struct SessionState {
  int assignment_index = 0;  // 0-based active assignment; == size() when finished
  std::vector<Assignment> assignments;
  bool alarm_active = false;
  std::int64_t clock_ms = 0;
  std::uint64_t tick = 0;
  std::uint64_t rng_seed = 0;
  std::vector<Event> event_log;
  std::set<std::string> blocked_inside;  // blocked trigger zones currently occupied

  bool finished() const { return assignment_index >= static_cast<int>(assignments.size()); }
  /// 1-based id of the active assignment, 0 once finished.
  int active_id() const { return finished() ? 0 : assignments[assignment_index].id; }
};

/// Places the agent at the first assignment's start door on its floor.
/// Throws InvalidArgument when eye height is outside [120, 220].
void init_session(const World& world, double eye_height_cm, std::uint64_t seed, AgentState& agent,
                  SessionState& session, std::vector<Assignment> protocol = default_protocol());

/// Advances one fixed tick. Throws InvalidArgument if dt_ms != kTickMs.
void step(const World& world, AgentState& agent, SessionState& session, const InputFrame& in, int dt_ms = kTickMs);

/// Protocol advance rules; step() calls this on sample ticks.
void evaluate_zone_entry(const World& world, SessionState& session, const AgentState& agent);

struct GazeHit {
  Vec3 point;
  std::string surface_id;   // empty for none
  std::string target_kind;  // "wall", "room_door", a sign kind, or "none"
  std::string target_id;
  double distance_cm = 0.0;

  bool hit() const { return target_kind != "none"; }
  /// "none", "wall:<surface>" or "<kind>:<id>".
  std::string label() const;
};

GazeHit gaze_raycast(const World& world, const AgentState& agent);

/// Ground point lies on the floor mesh at its elevation or on a flight strip.
bool on_walkable(const World& world, Vec3 ground, double tol = NavMesh::kContainEps);

}  // namespace wayfind
