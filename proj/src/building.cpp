#include "wayfind/building.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "wayfind/decompose.hpp"
#include "wayfind/error.hpp"

#ifndef WAYFIND_DATA_DIR
#define WAYFIND_DATA_DIR "."
#endif

namespace wayfind {

using nlohmann::json;

std::string_view to_string(SignKind k) {
  switch (k) {
    case SignKind::room_number: return "room_number";
    case SignKind::exit_sign: return "exit_sign";
    case SignKind::evacuation_sign: return "evacuation_sign";
    case SignKind::fire_door: return "fire_door";
    case SignKind::floor_plan: return "floor_plan";
  }
  return "room_number";
}

std::optional<SignKind> sign_kind_from(std::string_view s) {
  for (auto k : {SignKind::room_number, SignKind::exit_sign, SignKind::evacuation_sign, SignKind::fire_door,
                 SignKind::floor_plan}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(ZonePurpose p) {
  switch (p) {
    case ZonePurpose::trigger: return "trigger";
    case ZonePurpose::central_point: return "central_point";
    case ZonePurpose::spawn: return "spawn";
    case ZonePurpose::exit: return "exit";
    case ZonePurpose::wide_intersection: return "wide_intersection";
  }
  return "trigger";
}

std::pair<Vec2, Vec2> Floor::bounds() const {
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const auto& w : walkable) {
    for (auto p : w.polygon) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
  }
  return {lo, hi};
}

const Floor* BuildingSpec::find_floor(int id) const {
  for (const auto& f : floors) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

const Floor& BuildingSpec::floor(int id) const {
  if (const auto* f = find_floor(id)) return *f;
  throw ReferenceError("unknown floor " + std::to_string(id));
}

const Zone* BuildingSpec::find_zone(std::string_view id) const {
  for (const auto& z : zones) {
    if (z.id == id) return &z;
  }
  return nullptr;
}

const Zone& BuildingSpec::zone(std::string_view id) const {
  if (const auto* z = find_zone(id)) return *z;
  throw UnknownLabel("unknown zone " + std::string(id));
}

const RoomDef* BuildingSpec::find_room(std::string_view label) const {
  for (const auto& f : floors) {
    for (const auto& r : f.rooms) {
      if (r.label == label) return &r;
    }
  }
  return nullptr;
}

const ExitDef* BuildingSpec::find_exit(std::string_view label) const {
  for (const auto& e : exits) {
    if (e.label == label) return &e;
  }
  return nullptr;
}

int BuildingSpec::floor_at_z(double ground_z) const {
  int best = floors.empty() ? 0 : floors.front().id;
  double best_d = 1e300;
  for (const auto& f : floors) {
    const double d = std::abs(f.z_cm - ground_z);
    if (d < best_d) {
      best_d = d;
      best = f.id;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

const json& need(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(path + ": missing field '" + key + "'");
  return j.at(key);
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path + ": expected an integer");
  return j.get<int>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path + ": expected a string");
  return j.get<std::string>();
}

Vec2 point2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path + ": expected [x, y]");
  return {num(j[0], path + "[0]"), num(j[1], path + "[1]")};
}

Vec3 point3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ParseError(path + ": expected [x, y, z]");
  return {num(j[0], path + "[0]"), num(j[1], path + "[1]"), num(j[2], path + "[2]")};
}

Polygon polygon(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() < 3) throw ParseError(path + ": polygon needs at least 3 points");
  Polygon p;
  for (std::size_t i = 0; i < j.size(); ++i) p.push_back(point2(j[i], path + "[" + std::to_string(i) + "]"));
  return p;
}

const json& array_field(const json& j, const char* key, const std::string& path) {
  const json& a = need(j, key, path);
  if (!a.is_array()) throw ParseError(path + "." + key + ": expected an array");
  return a;
}

std::string hash_document(const json& doc) {
  const std::string canonical = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

BuildingSpec load_building(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("building document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("building document: top level must be an object");

  BuildingSpec spec;
  spec.name = text(need(doc, "name", "$"), "$.name");
  if (doc.contains("exit_floor")) spec.exit_floor = integer(doc["exit_floor"], "$.exit_floor");
  if (doc.contains("story_height_cm")) spec.story_height_cm = num(doc["story_height_cm"], "$.story_height_cm");

  const json& floors = array_field(doc, "floors", "$");
  if (floors.empty()) throw ParseError("no floors");
  std::set<int> floor_ids;
  std::set<std::string> room_labels;
  for (std::size_t i = 0; i < floors.size(); ++i) {
    const std::string fp = "$.floors[" + std::to_string(i) + "]";
    const json& fj = floors[i];
    Floor f;
    f.id = integer(need(fj, "id", fp), fp + ".id");
    f.z_cm = num(need(fj, "z_cm", fp), fp + ".z_cm");
    if (!floor_ids.insert(f.id).second) throw ParseError(fp + ": duplicate floor id " + std::to_string(f.id));
    const json& walk = array_field(fj, "walkable", fp);
    for (std::size_t k = 0; k < walk.size(); ++k) {
      const std::string wp = fp + ".walkable[" + std::to_string(k) + "]";
      WalkableArea w;
      w.id = walk[k].value("id", "w" + std::to_string(k));
      w.kind = walk[k].value("kind", "other");
      w.polygon = polygon(need(walk[k], "polygon", wp), wp + ".polygon");
      f.walkable.push_back(std::move(w));
    }
    if (fj.contains("obstacles")) {
      const json& obs = array_field(fj, "obstacles", fp);
      for (std::size_t k = 0; k < obs.size(); ++k) {
        const std::string op = fp + ".obstacles[" + std::to_string(k) + "]";
        Obstacle o;
        o.id = obs[k].value("id", "o" + std::to_string(k));
        o.kind = obs[k].value("kind", "wall");
        o.polygon = polygon(need(obs[k], "polygon", op), op + ".polygon");
        f.obstacles.push_back(std::move(o));
      }
    }
    if (fj.contains("rooms")) {
      const json& rooms = array_field(fj, "rooms", fp);
      for (std::size_t k = 0; k < rooms.size(); ++k) {
        const std::string rp = fp + ".rooms[" + std::to_string(k) + "]";
        RoomDef r;
        r.label = text(need(rooms[k], "label", rp), rp + ".label");
        r.floor = f.id;
        if (rooms[k].contains("floor")) {
          const int declared = integer(rooms[k]["floor"], rp + ".floor");
          if (declared != f.id) throw ReferenceError(rp + ": room " + r.label + " references floor " + std::to_string(declared));
        }
        r.door = point2(need(rooms[k], "door", rp), rp + ".door");
        const std::string side = text(need(rooms[k], "side", rp), rp + ".side");
        if (side == "even") {
          r.side = RoomSide::even;
        } else if (side == "uneven") {
          r.side = RoomSide::uneven;
        } else {
          throw ParseError(rp + ".side: expected even|uneven");
        }
        if (!room_labels.insert(r.label).second) throw ParseError("duplicate room label " + r.label);
        f.rooms.push_back(std::move(r));
      }
    }
    if (fj.contains("signs")) {
      const json& signs = array_field(fj, "signs", fp);
      for (std::size_t k = 0; k < signs.size(); ++k) {
        const std::string sp = fp + ".signs[" + std::to_string(k) + "]";
        SignDef s;
        const auto kind = sign_kind_from(text(need(signs[k], "kind", sp), sp + ".kind"));
        if (!kind) throw ParseError(sp + ".kind: unknown sign kind");
        s.kind = *kind;
        s.floor = f.id;
        s.position = point2(need(signs[k], "position", sp), sp + ".position");
        s.normal = point2(need(signs[k], "normal", sp), sp + ".normal");
        s.target = signs[k].value("target", "");
        if (signs[k].contains("width_cm")) s.width_cm = num(signs[k]["width_cm"], sp + ".width_cm");
        f.signs.push_back(std::move(s));
      }
    }
    if (fj.contains("expected")) {
      const json& ex = fj["expected"];
      if (ex.contains("main_corridors")) f.expected_main_corridors = integer(ex["main_corridors"], fp + ".expected");
      if (ex.contains("cross_corridors")) f.expected_cross_corridors = integer(ex["cross_corridors"], fp + ".expected");
    }
    spec.floors.push_back(std::move(f));
  }
  std::sort(spec.floors.begin(), spec.floors.end(), [](const Floor& a, const Floor& b) { return a.id < b.id; });

  auto check_floor = [&](int id, const std::string& who) {
    if (!floor_ids.count(id)) throw ReferenceError(who + " references missing floor " + std::to_string(id));
  };

  const json& stairs = array_field(doc, "staircases", "$");
  std::set<std::string> stair_labels;
  for (std::size_t i = 0; i < stairs.size(); ++i) {
    const std::string sp = "$.staircases[" + std::to_string(i) + "]";
    Staircase s;
    s.label = text(need(stairs[i], "label", sp), sp + ".label");
    if (!stair_labels.insert(s.label).second) throw ParseError("duplicate staircase label " + s.label);
    s.lower_floor = integer(need(stairs[i], "lower_floor", sp), sp + ".lower_floor");
    s.upper_floor = integer(need(stairs[i], "upper_floor", sp), sp + ".upper_floor");
    check_floor(s.lower_floor, "staircase " + s.label);
    check_floor(s.upper_floor, "staircase " + s.label);
    const json& flights = array_field(stairs[i], "flights", sp);
    for (std::size_t k = 0; k < flights.size(); ++k) {
      const std::string fp = sp + ".flights[" + std::to_string(k) + "]";
      Flight fl;
      fl.lower_floor = integer(need(flights[k], "lower_floor", fp), fp + ".lower_floor");
      fl.upper_floor = integer(need(flights[k], "upper_floor", fp), fp + ".upper_floor");
      check_floor(fl.lower_floor, "staircase " + s.label);
      check_floor(fl.upper_floor, "staircase " + s.label);
      if (flights[k].contains("width_cm")) fl.width_cm = num(flights[k]["width_cm"], fp + ".width_cm");
      const json& ramp = array_field(flights[k], "ramp", fp);
      if (ramp.size() != 4) throw ParseError(fp + ".ramp: expected 4 points (landing, mouth, mouth, landing)");
      for (std::size_t r = 0; r < ramp.size(); ++r) fl.ramp.push_back(point3(ramp[r], fp + ".ramp[" + std::to_string(r) + "]"));
      s.flights.push_back(std::move(fl));
    }
    if (stairs[i].contains("footprints")) {
      for (const auto& fpj : stairs[i]["footprints"]) {
        const int fid = integer(need(fpj, "floor", sp), sp + ".footprints.floor");
        check_floor(fid, "staircase " + s.label);
        s.footprints.emplace_back(fid, polygon(need(fpj, "polygon", sp), sp + ".footprints.polygon"));
      }
    }
    spec.staircases.push_back(std::move(s));
  }

  const json& exits = array_field(doc, "exits", "$");
  std::set<std::string> exit_labels;
  for (std::size_t i = 0; i < exits.size(); ++i) {
    const std::string ep = "$.exits[" + std::to_string(i) + "]";
    ExitDef e;
    e.label = text(need(exits[i], "label", ep), ep + ".label");
    if (!exit_labels.insert(e.label).second) throw ParseError("duplicate exit label " + e.label);
    e.position = point2(need(exits[i], "position", ep), ep + ".position");
    e.is_main_entrance = exits[i].value("is_main_entrance", false);
    spec.exits.push_back(std::move(e));
  }
  check_floor(spec.exit_floor, "exit floor");

  const json& zones = array_field(doc, "zones", "$");
  std::set<std::string> zone_ids;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const std::string zp = "$.zones[" + std::to_string(i) + "]";
    Zone z;
    z.id = text(need(zones[i], "id", zp), zp + ".id");
    if (!zone_ids.insert(z.id).second) throw ParseError("duplicate zone id " + z.id);
    z.floor = integer(need(zones[i], "floor", zp), zp + ".floor");
    check_floor(z.floor, "zone " + z.id);
    z.polygon = polygon(need(zones[i], "polygon", zp), zp + ".polygon");
    const std::string purpose = zones[i].value("purpose", "trigger");
    bool known = false;
    for (auto p : {ZonePurpose::trigger, ZonePurpose::central_point, ZonePurpose::spawn, ZonePurpose::exit,
                   ZonePurpose::wide_intersection}) {
      if (to_string(p) == purpose) {
        z.purpose = p;
        known = true;
      }
    }
    if (!known) throw ParseError(zp + ".purpose: unknown purpose '" + purpose + "'");
    if (zones[i].contains("yaw_deg")) z.yaw_deg = num(zones[i]["yaw_deg"], zp + ".yaw_deg");
    spec.zones.push_back(std::move(z));
  }

  spec.hash = hash_document(doc);
  return spec;
}

BuildingSpec load_building_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open building file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_building(ss.str());
}

std::string data_dir() { return WAYFIND_DATA_DIR; }

std::string default_fixture_path() {
  if (const char* env = std::getenv("WAYFIND_FIXTURE"); env && *env) return env;
  return data_dir() + "/fixtures/ceg_fixture.json";
}

// ---------------------------------------------------------------------------
// Validation

namespace {

double distance_to_boundary(const Floor& f, Vec2 p) {
  double best = 1e300;
  for (const auto& w : f.walkable) {
    const auto& r = w.polygon;
    for (std::size_t i = 0; i < r.size(); ++i) best = std::min(best, distance_to_segment(p, {r[i], r[(i + 1) % r.size()]}));
  }
  return best;
}

bool inside_walkable(const Floor& f, Vec2 p, double tol) {
  for (const auto& w : f.walkable) {
    if (point_in_polygon(w.polygon, p)) return true;
  }
  return distance_to_boundary(f, p) <= tol;
}

std::optional<int> room_number(const std::string& label) {
  const auto dot = label.find('.');
  if (dot == std::string::npos || dot + 1 >= label.size()) return std::nullopt;
  try {
    return std::stoi(label.substr(dot + 1));
  } catch (...) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<std::string> validate_building(const BuildingSpec& spec) {
  std::vector<std::string> out;
  if (spec.floors.empty()) out.push_back("building: no floors");

  std::set<int> ids;
  std::map<double, int> elevations;
  for (const auto& f : spec.floors) {
    const std::string who = "floor " + std::to_string(f.id);
    if (!ids.insert(f.id).second) out.push_back(who + ": duplicate floor id");
    if (auto [it, fresh] = elevations.emplace(f.z_cm, f.id); !fresh) {
      out.push_back(who + ": elevation equals floor " + std::to_string(it->second));
    }
    if (f.walkable.empty()) out.push_back(who + ": no walkable area");
    for (const auto& w : f.walkable) {
      if (!is_simple(w.polygon)) out.push_back(who + ": walkable " + w.id + " is not simple");
    }
    const auto [lo, hi] = f.bounds();
    for (const auto& o : f.obstacles) {
      for (auto p : o.polygon) {
        if (p.x < lo.x - 1e-6 || p.x > hi.x + 1e-6 || p.y < lo.y - 1e-6 || p.y > hi.y + 1e-6) {
          out.push_back(who + ": obstacle " + o.id + " outside floor bounds");
          break;
        }
      }
    }
    const auto count_kind = [&](std::initializer_list<std::string_view> kinds) {
      return static_cast<int>(std::count_if(f.walkable.begin(), f.walkable.end(), [&](const WalkableArea& w) {
        return std::find(kinds.begin(), kinds.end(), w.kind) != kinds.end();
      }));
    };
    if (f.expected_main_corridors && count_kind({"main_corridor"}) != *f.expected_main_corridors) {
      out.push_back(who + ": main corridor count " + std::to_string(count_kind({"main_corridor"})) + " != " +
                    std::to_string(*f.expected_main_corridors));
    }
    if (f.expected_cross_corridors &&
        count_kind({"cross_corridor", "wide_intersection"}) != *f.expected_cross_corridors) {
      out.push_back(who + ": cross corridor count " + std::to_string(count_kind({"cross_corridor", "wide_intersection"})) +
                    " != " + std::to_string(*f.expected_cross_corridors));
    }
    for (const auto& r : f.rooms) {
      if (const auto nn = room_number(r.label)) {
        const RoomSide want = (*nn % 2 == 0) ? RoomSide::even : RoomSide::uneven;
        if (r.side != want) out.push_back("room " + r.label + ": side does not match number parity");
      } else {
        out.push_back("room " + r.label + ": label is not <floor>.<number>");
      }
      if (distance_to_boundary(f, r.door) > 1e-3) out.push_back("room " + r.label + ": door not on walkable boundary");
    }
    for (const auto& s : f.signs) {
      if (std::abs(norm(s.normal) - 1.0) > 1e-9) {
        out.push_back("sign " + s.target + " on " + who + ": facing normal is not unit length");
      }
    }
  }

  std::map<std::string, int> labels;
  for (const auto& f : spec.floors) {
    for (const auto& r : f.rooms) labels[r.label]++;
  }
  for (const auto& [label, n] : labels) {
    if (n > 1) out.push_back("duplicate room label " + label);
  }

  for (const auto& s : spec.staircases) {
    const std::string who = "staircase " + s.label;
    if (!spec.find_floor(s.lower_floor)) out.push_back(who + ": lower floor " + std::to_string(s.lower_floor) + " missing");
    if (!spec.find_floor(s.upper_floor)) out.push_back(who + ": upper floor " + std::to_string(s.upper_floor) + " missing");
    if (s.flights.empty()) out.push_back(who + ": no flights");
    for (const auto& fl : s.flights) {
      const Floor* lo = spec.find_floor(fl.lower_floor);
      const Floor* up = spec.find_floor(fl.upper_floor);
      if (!lo || !up) {
        out.push_back(who + ": flight references a missing floor");
        continue;
      }
      bool monotone = true;
      for (std::size_t i = 1; i < fl.ramp.size(); ++i) {
        if (fl.ramp[i].z < fl.ramp[i - 1].z) monotone = false;
      }
      if (!monotone || std::abs(fl.ramp.front().z - lo->z_cm) > 1e-6 || std::abs(fl.ramp.back().z - up->z_cm) > 1e-6) {
        out.push_back(who + ": ramp does not climb monotonically from floor " + std::to_string(lo->id) + " to floor " +
                      std::to_string(up->id));
      }
      if (!inside_walkable(*lo, fl.lower_landing().xy(), 1e-6)) out.push_back(who + ": lower landing off the walkable area");
      if (!inside_walkable(*up, fl.upper_landing().xy(), 1e-6)) out.push_back(who + ": upper landing off the walkable area");
    }
  }

  int mains = 0;
  const Floor* exit_floor = spec.find_floor(spec.exit_floor);
  for (const auto& e : spec.exits) {
    if (e.is_main_entrance) ++mains;
    if (!exit_floor || !inside_walkable(*exit_floor, e.position, 1e-6)) {
      out.push_back("exit " + e.label + ": not on the exit floor");
    }
  }
  if (mains == 0) out.push_back("no main entrance");
  if (mains > 1) out.push_back("multiple main entrances");

  for (const auto& z : spec.zones) {
    if (!spec.find_floor(z.floor)) out.push_back("zone " + z.id + ": floor missing");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lookups

Place lookup_place(const BuildingSpec& spec, std::string_view label) {
  if (const RoomDef* r = spec.find_room(label)) {
    const double z = spec.floor(r->floor).z_cm;
    return {r->floor, {r->door.x, r->door.y, z}};
  }
  constexpr std::string_view kExit = "Exit ";
  if (label.starts_with(kExit)) {
    if (const ExitDef* e = spec.find_exit(label.substr(kExit.size()))) {
      return {spec.exit_floor, {e->position.x, e->position.y, spec.floor(spec.exit_floor).z_cm}};
    }
  }
  constexpr std::string_view kStair = "Stair ";
  if (label.starts_with(kStair)) {
    for (const auto& s : spec.staircases) {
      if (s.label != label.substr(kStair.size()) || s.flights.empty()) continue;
      const Flight* lowest = &s.flights.front();
      for (const auto& fl : s.flights) {
        if (fl.lower_floor < lowest->lower_floor) lowest = &fl;
      }
      return {lowest->lower_floor, lowest->lower_landing()};
    }
  }
  if (const Zone* z = spec.find_zone(label)) {
    const Vec2 c = centroid(z->polygon);
    return {z->floor, {c.x, c.y, spec.floor(z->floor).z_cm}};
  }
  throw UnknownLabel("unknown place label '" + std::string(label) + "'");
}

std::vector<Segment> boundary_segments(std::span<const Polygon> walkable, std::span<const Polygon> obstacles) {
  return region_boundary(decompose(walkable, obstacles));
}

std::vector<WallSegment> wall_segments(const BuildingSpec& spec, int floor_id) {
  const Floor& f = spec.floor(floor_id);
  std::vector<Polygon> walk, obs;
  for (const auto& w : f.walkable) walk.push_back(w.polygon);
  for (const auto& o : f.obstacles) obs.push_back(o.polygon);
  const auto segs = boundary_segments(walk, obs);

  std::vector<WallSegment> out;
  out.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    out.push_back({segs[i], "f" + std::to_string(floor_id) + "/w" + std::to_string(i), {}});
  }
  auto attach = [&](Decal d) {
    WallSegment* best = nullptr;
    double best_d = 1.0;  // decals must sit within 1 cm of a wall
    for (auto& w : out) {
      const double dist = distance_to_segment(d.center, w.seg);
      if (dist < best_d) {
        best_d = dist;
        best = &w;
      }
    }
    if (best) best->decals.push_back(std::move(d));
  };
  for (const auto& r : f.rooms) attach({"room_door", r.label, r.door, 45.0});
  for (const auto& s : f.signs) attach({std::string(to_string(s.kind)), s.target, s.position, 0.5 * s.width_cm});
  return out;
}

}  // namespace wayfind
