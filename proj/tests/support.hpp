#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "wayfind/building.hpp"
#include "wayfind/simulation.hpp"

namespace testing {

inline const wayfind::World& fixture_world() {
  static const wayfind::World world(wayfind::load_building_file(wayfind::data_dir() + "/fixtures/ceg_fixture.json"));
  return world;
}

inline std::string fixture_text() {
  std::ifstream in(wayfind::data_dir() + "/fixtures/ceg_fixture.json", std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wayfind_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

namespace testing {

/// One-floor building: a 1000 x 200 corridor, optionally with a 50 x 40 pillar.
inline std::string mini_building(bool pillar) {
  std::string obstacles = pillar
      ? R"([{"id": "p1", "kind": "pillar", "polygon": [[400, 80], [450, 80], [450, 120], [400, 120]]}])"
      : "[]";
  return R"({"name": "mini", "units": "cm", "exit_floor": 1, "story_height_cm": 400,
    "floors": [{"id": 1, "z_cm": 0,
      "walkable": [{"id": "c", "kind": "main_corridor", "polygon": [[0, 0], [1000, 0], [1000, 200], [0, 200]]}],
      "obstacles": )" + obstacles + R"(, "rooms": [], "signs": []}],
    "staircases": [],
    "exits": [{"label": "A", "position": [950, 100], "is_main_entrance": true}],
    "zones": []})";
}

}  // namespace testing
