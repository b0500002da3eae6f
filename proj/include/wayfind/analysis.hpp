#pragma once

// Post-hoc analysis of session logs: per-assignment splits, time spent,
// route-strategy classification, exit and staircase tallies, gaze heatmaps
// and speed statistics. Everything here is a pure function of parsed logs
// plus the building.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wayfind/simulation.hpp"
#include "wayfind/telemetry.hpp"

namespace wayfind {

struct AssignmentSplit {
  int assignment = 0;
  std::vector<TelemetrySample> samples;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;   // completion time; last sample time when incomplete
  bool complete = false;
  double eye_height_cm = 0.0;
};

/// Eye height implied by the first sample: its height above the floor
/// lying 120..220 cm below it. Throws ParseError if no floor fits.
double estimate_eye_height(const SessionLog& log, const BuildingSpec& spec);

/// Splits partition the samples: split k holds samples from its start event
/// up to (excluding) the next split's first sample; the final split runs to
/// the end of the log. Throws ParseError on unmatched or out-of-order events.
std::vector<AssignmentSplit> split_by_assignment(const SessionLog& log, const BuildingSpec& spec);

struct Stat {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample SD (n-1); 0 when n < 2
};

Stat describe(const std::vector<double>& xs);

/// Seconds from start to completion, for complete splits only.
std::map<int, double> time_spent(const std::vector<AssignmentSplit>& splits);

struct CohortTimes {
  std::map<int, Stat> per_assignment;
  Stat total;  // over sessions with all assignments complete
};

CohortTimes cohort_time_spent(const std::vector<std::vector<AssignmentSplit>>& sessions);

enum class StrategyKind { central_point, direction, floor, mixed };
std::string_view to_string(StrategyKind k);

struct StrategyThresholds {
  double direction_h = 0.7;
  double floor_h = 0.3;
  double central_detour = 1.25;
  double switch_central_detour = 1.1;
  double switch_direction = 0.25;
};

struct StrategyLabel {
  StrategyKind label = StrategyKind::mixed;
  std::optional<double> h_star;
  double detour_ratio = 1.0;
  bool visited_central = false;
  std::optional<double> switch_fraction;
  bool switch_in_wide = false;
};

StrategyLabel classify_strategy(const AssignmentSplit& split, const World& world,
                                const StrategyThresholds& th = {});

/// Session-level label: central_point if assignment 2 or 3 is central_point;
/// otherwise their common label, or assignment 2's label when they differ.
StrategyKind session_strategy(const std::map<int, StrategyLabel>& labels);

/// Staircase labels in the order the trajectory enters their flights.
std::vector<std::string> staircases_used(const AssignmentSplit& split, const World& world);

struct ChoiceTally {
  std::map<std::string, int> exits;       // every building exit, zero-filled
  std::map<std::string, int> staircases;  // (session, assignment) pairs using it
  int completed = 0;
  int excluded = 0;
  int nearest_agreement = 0;
  double nearest_exit_agreement = 0.0;  // fraction of completed sessions
};

ChoiceTally choice_tally(const std::vector<SessionLog>& logs, const World& world);

struct HeatmapGrid {
  int floor = 0;
  double cell_cm = 25.0;
  Vec2 origin;
  int nx = 0;
  int ny = 0;
  std::vector<std::int64_t> counts;  // row-major, ny rows of nx

  std::int64_t at(int ix, int iy) const { return counts[static_cast<std::size_t>(iy) * nx + ix]; }
  std::int64_t total() const;
};

/// Floor whose storey [z, z + story) contains a gaze hit height.
int gaze_floor(const BuildingSpec& spec, double gaze_z);

/// Throws InvalidArgument unless cell_cm is in [10, 200].
HeatmapGrid gaze_heatmap(const std::vector<SessionLog>& logs, const BuildingSpec& spec, int floor,
                         double cell_cm = 25.0);

/// Target kind ("wall", "room_number", "none", ...) counts per assignment id.
std::map<int, std::map<std::string, std::int64_t>> gaze_target_tally(const std::vector<SessionLog>& logs);

struct SpeedStats {
  double mean = 0.0;
  double max = 0.0;
  double bin_cm_s = 10.0;
  std::vector<std::int64_t> histogram;  // [k*bin, (k+1)*bin), last bin closed
};

/// Horizontal speed between consecutive samples. Needs at least 2 samples.
SpeedStats speed_stats(const std::vector<TelemetrySample>& samples);

/// Writes time_spent.csv, strategies.csv, choices.csv, gaze_targets.csv and
/// heatmap_floor<k>.csv for every floor into out_dir.
void write_analysis(const std::vector<SessionLog>& logs, const World& world, const std::filesystem::path& out_dir,
                    double cell_cm = 25.0);

}  // namespace wayfind
