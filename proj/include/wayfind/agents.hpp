#pragma once

// Scripted participants. Each policy turns an assignment into a waypoint
// route with a recognisable route-choice strategy, and a follower converts
// the route into per-tick InputFrames, so generated sessions pass through
// exactly the same simulation as a human client.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "wayfind/simulation.hpp"
#include "wayfind/telemetry.hpp"

namespace wayfind {

enum class PolicyKind { central_point, direction, floor, nearest_exit };

std::string_view to_string(PolicyKind k);
/// Throws InvalidArgument for unknown names.
PolicyKind policy_kind_from(std::string_view name);

inline constexpr double kPolicyClearanceCm = 30.0;
inline constexpr double kArrivalRadiusCm = 20.0;
/// Stair landings and mouths are hit closely so flights are entered square.
inline constexpr double kStairArrivalRadiusCm = 3.0;
inline constexpr double kMaxWaypointNoiseCm = 100.0;
inline constexpr double kNoiseSpacingCm = 600.0;

struct PolicySpec {
  PolicyKind kind = PolicyKind::direction;
  std::uint64_t jitter_seed = 0;
  double waypoint_noise_cm = 30.0;  // in [0, 100]
};

struct Route {
  std::vector<Vec3> points;  // ground level
  std::vector<int> floor;
  std::vector<bool> fixed;   // stair and end points; never perturbed
  std::vector<std::string> staircases;
  std::optional<std::string> exit;  // evacuation target label
  double length_cm = 0.0;
};

/// Route for one assignment starting at `from`. The rng drives waypoint
/// noise; pass nullptr (or zero noise) for the unperturbed route.
Route plan_route(const PolicySpec& policy, const World& world, const Assignment& assignment, const Place& from,
                 std::mt19937_64* rng = nullptr);

/// Evacuation target of the nearest_exit policy: argmin of shortest-path
/// length over all exits, ties broken by label order.
std::string nearest_exit(const World& world, const Place& from);

class RouteFollower {
 public:
  RouteFollower() = default;
  explicit RouteFollower(Route route) : route_(std::move(route)) {}

  /// Heads for the current waypoint; advances within the arrival radius and
  /// releases the move input once the last waypoint is reached.
  InputFrame next(const AgentState& agent);

  bool done() const { return index_ >= route_.points.size(); }
  std::size_t index() const { return index_; }
  const Route& route() const { return route_; }

 private:
  Route route_;
  std::size_t index_ = 0;
};

inline InputFrame policy_step(RouteFollower& follower, const AgentState& agent) { return follower.next(agent); }

struct SessionRun {
  PolicySpec policy;
  SessionLog log;
  InputTrace trace;
  std::vector<Route> routes;  // one per started assignment
  bool finished = false;
};

/// Drives a whole session with one policy; stops at session end or max_ticks.
SessionRun run_session(const World& world, const PolicySpec& policy, const std::string& participant,
                       double eye_height_cm, std::uint64_t seed, std::uint64_t max_ticks = 200000,
                       LogWriter* writer = nullptr);

/// n sessions, policy i taken from mix[i % mix.size()] with jitter seed
/// base_seed + i. Throws Error if a session does not finish.
std::vector<SessionRun> generate_cohort(const World& world, int n, const std::vector<PolicySpec>& mix,
                                        std::uint64_t base_seed);

}  // namespace wayfind
