#pragma once

// Declarative description of the multi-story experiment building.
//
// A BuildingSpec is loaded once from a JSON document (docs/building-schema.md)
// and is immutable afterwards; every other module holds it by const reference.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wayfind/geometry.hpp"

namespace wayfind {

struct WalkableArea {
  std::string id;
  std::string kind;  // main_corridor | cross_corridor | wide_intersection | hall | other
  Polygon polygon;
};

struct Obstacle {
  std::string id;
  std::string kind;  // elevator | pillar | wall | furniture
  Polygon polygon;
};

enum class RoomSide { even, uneven };

struct RoomDef {
  std::string label;  // "4.02"
  int floor = 0;
  Vec2 door;
  RoomSide side = RoomSide::even;
};

enum class SignKind { room_number, exit_sign, evacuation_sign, fire_door, floor_plan };

std::string_view to_string(SignKind k);
std::optional<SignKind> sign_kind_from(std::string_view s);

struct SignDef {
  SignKind kind = SignKind::room_number;
  int floor = 0;
  Vec2 position;
  Vec2 normal;
  std::string target;
  double width_cm = 60.0;
};

struct Floor {
  int id = 0;
  double z_cm = 0.0;
  std::vector<WalkableArea> walkable;
  std::vector<Obstacle> obstacles;
  std::vector<RoomDef> rooms;
  std::vector<SignDef> signs;
  std::optional<int> expected_main_corridors;
  std::optional<int> expected_cross_corridors;

  /// Axis-aligned bounds of the walkable polygons: {min, max}.
  std::pair<Vec2, Vec2> bounds() const;
};

/// One straight flight between two adjacent floors. The ramp runs
/// lower landing -> lower mouth -> upper mouth -> upper landing; the two
/// landings lie inside the corridors, the mouths on the corridor edges.
struct Flight {
  int lower_floor = 0;
  int upper_floor = 0;
  double width_cm = 150.0;
  std::vector<Vec3> ramp;

  Vec3 lower_landing() const { return ramp.front(); }
  Vec3 upper_landing() const { return ramp.back(); }
  Vec3 lower_mouth() const { return ramp[1]; }
  Vec3 upper_mouth() const { return ramp[ramp.size() - 2]; }
};

struct Staircase {
  std::string label;  // A-E
  int lower_floor = 0;
  int upper_floor = 0;
  std::vector<Flight> flights;
  std::vector<std::pair<int, Polygon>> footprints;
};

struct ExitDef {
  std::string label;
  Vec2 position;
  bool is_main_entrance = false;
};

enum class ZonePurpose { trigger, central_point, spawn, exit, wide_intersection };

std::string_view to_string(ZonePurpose p);

struct Zone {
  std::string id;
  int floor = 0;
  Polygon polygon;
  ZonePurpose purpose = ZonePurpose::trigger;
  std::optional<double> yaw_deg;

  bool contains(Vec2 p) const { return point_in_polygon(polygon, p); }
};

struct BuildingSpec {
  std::string name;
  int exit_floor = 1;
  double story_height_cm = 400.0;
  std::vector<Floor> floors;
  std::vector<Staircase> staircases;
  std::vector<ExitDef> exits;
  std::vector<Zone> zones;
  std::string hash;  // FNV-1a of the canonical document

  const Floor& floor(int id) const;
  const Floor* find_floor(int id) const;
  const Zone& zone(std::string_view id) const;
  const Zone* find_zone(std::string_view id) const;
  const RoomDef* find_room(std::string_view label) const;
  const ExitDef* find_exit(std::string_view label) const;
  /// Floor whose elevation is nearest to a ground-level z.
  int floor_at_z(double ground_z) const;
};

/// A labelled location: floor and a ground-level 3D point.
struct Place {
  int floor = 0;
  Vec3 point;
};

BuildingSpec load_building(std::string_view document);
BuildingSpec load_building_file(const std::string& path);

/// Every invariant violation as "<entity>: <rule>"; empty when valid.
std::vector<std::string> validate_building(const BuildingSpec& spec);

/// Rooms ("4.02"), exits ("Exit C"), staircases ("Stair A", lower entry) and zone ids.
Place lookup_place(const BuildingSpec& spec, std::string_view label);

/// A decal painted on a wall segment: a room door or a sign.
struct Decal {
  std::string kind;  // "room_door" or a SignKind name
  std::string id;    // room label or sign target
  Vec2 center;
  double half_width = 0.0;
};

struct WallSegment {
  Segment seg;
  std::string surface_id;  // "f<floor>/w<index>"
  std::vector<Decal> decals;
};

/// Boundary of (walkable minus obstacles) on a floor, merged into maximal
/// straight runs, with room doors and signs attached to the segment they sit on.
std::vector<WallSegment> wall_segments(const BuildingSpec& spec, int floor);

/// Same boundary for free-standing polygons, without decals.
std::vector<Segment> boundary_segments(std::span<const Polygon> walkable, std::span<const Polygon> obstacles);

/// Path to the bundled fixture: $WAYFIND_FIXTURE or the compiled-in default.
std::string default_fixture_path();
std::string data_dir();

}  // namespace wayfind
