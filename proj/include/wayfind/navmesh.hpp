#pragma once

// Walkable navigation mesh built from a BuildingSpec.
//
// Each floor's walkable area (corridors minus obstacles) is cut into convex
// trapezoid cells by a vertical-slab decomposition. Neighbouring cells meet
// along vertical portals; a triangle view of the same cells is available for
// export. Staircase flights become stair links between a landing point on
// each of two floors.
//
// Path queries search a graph of portal sample points (Dijkstra), then pull
// the string through the resulting cell channel on every floor leg.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wayfind/building.hpp"
#include "wayfind/decompose.hpp"

namespace wayfind {

struct NavCell {
  int floor = 0;
  Trapezoid trap;
  Polygon ring;  // convex, counter-clockwise
  std::vector<int> portals;
};

struct Portal {
  int left_cell = 0;   // cell with the smaller x
  int right_cell = 0;
  int floor = 0;
  double x = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  int other(int cell) const { return cell == left_cell ? right_cell : left_cell; }
};

struct StairLink {
  std::string staircase;
  int lower_floor = 0;
  int upper_floor = 0;
  Vec3 lower_node;
  Vec3 upper_node;
  int lower_cell = -1;
  int upper_cell = -1;
  std::vector<Vec3> ramp;  // lower landing first
  double width_cm = 150.0;
  double length_cm = 0.0;  // 3D arc length of the ramp
};

struct Triangle {
  int floor = 0;
  Vec2 a, b, c;
};

struct PathResult {
  std::vector<Vec3> waypoints;      // ground-level points
  std::vector<int> waypoint_floor;  // floor of each waypoint
  std::vector<bool> on_stair;       // true for landings and mouths of a flight
  std::vector<int> links_used;      // stair link indices in travel order
  std::vector<int> floors_visited;
  double length_cm = 0.0;
};

struct PathOptions {
  /// Portal endpoints are pulled in by this much (agent clearance).
  double clearance_cm = 0.0;
  /// Points farther than this from the mesh are unreachable.
  double snap_cm = 30.0;
  bool allow_stairs = true;
  /// Restrict stair links to one staircase label.
  std::optional<std::string> staircase;
};

class NavMesh {
 public:
  static constexpr double kContainEps = 1e-6;

  const std::vector<NavCell>& cells() const { return cells_; }
  const std::vector<Portal>& portals() const { return portals_; }
  const std::vector<StairLink>& links() const { return links_; }
  std::vector<Triangle> triangles() const;
  std::vector<int> floor_ids() const;
  double floor_z(int floor) const;
  double floor_area(int floor) const;

  /// Cells of a floor whose closed region lies within eps of p.
  std::vector<int> cells_at(int floor, Vec2 p, double eps = kContainEps) const;

  bool contains(int floor, Vec2 p) const;
  Vec2 project(int floor, Vec2 p) const;

  PathResult path(const Place& a, const Place& b, const PathOptions& opt = {}) const;

  /// JSON dump of triangles and stair links for debugging.
  std::string dump_json() const;

 private:
  friend NavMesh build_navmesh(const BuildingSpec& spec);

  struct FloorIndex {
    double z = 0.0;
    std::vector<double> slab_x;
    std::vector<std::vector<int>> slabs;  // global cell ids
    std::vector<int> cells;
  };

  const FloorIndex& index(int floor) const;

  std::vector<NavCell> cells_;
  std::vector<Portal> portals_;
  std::vector<StairLink> links_;
  std::map<int, FloorIndex> floors_;
};

NavMesh build_navmesh(const BuildingSpec& spec);

bool contains(const NavMesh& mesh, int floor, Vec2 p);
Vec2 project_to_walkable(const NavMesh& mesh, int floor, Vec2 p);
PathResult shortest_path(const NavMesh& mesh, const Place& a, const Place& b, const PathOptions& opt = {});

/// String pulling through a channel of portals; portals are (left, right)
/// pairs as seen when walking from start to goal.
std::vector<Vec2> pull_string(Vec2 start, Vec2 goal, const std::vector<std::pair<Vec2, Vec2>>& portals);

}  // namespace wayfind
