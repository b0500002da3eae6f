#include "wayfind/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "wayfind/agents.hpp"
#include "wayfind/csv.hpp"
#include "wayfind/error.hpp"

namespace wayfind {

namespace {

struct Tag {
  std::string name;
  std::string detail;
};

Tag parse_tag(const std::string& tag) {
  const auto sp = tag.find(' ');
  if (sp == std::string::npos) return {tag, {}};
  return {tag.substr(0, sp), tag.substr(sp + 1)};
}

/// Events from the sidecar when present, else rebuilt from sample tags.
std::vector<Event> events_of(const SessionLog& log) {
  if (!log.events.empty()) return log.events;
  std::vector<Event> out;
  for (const auto& s : log.samples) {
    if (s.event.empty()) continue;
    std::size_t pos = 0;
    while (pos <= s.event.size()) {
      const auto semi = s.event.find(';', pos);
      const std::string tag = s.event.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos);
      const Tag t = parse_tag(tag);
      out.push_back({s.t_ms, t.name, t.detail});
      if (semi == std::string::npos) break;
      pos = semi + 1;
    }
  }
  return out;
}

Vec3 ground_of(const TelemetrySample& s, double eye) { return {s.x_cm, s.y_cm, s.z_cm - eye}; }

/// Ground z lies on a floor (not on a flight).
bool at_floor_level(const BuildingSpec& spec, double z) {
  return std::abs(spec.floor(spec.floor_at_z(z)).z_cm - z) < 0.5;
}

double axis_fraction(Vec2 p, Vec2 s, Vec2 g) {
  const Vec2 axis = g - s;
  const double len2 = dot(axis, axis);
  if (len2 < 1e-12) return 0.0;
  return std::clamp(dot(p - s, axis) / len2, 0.0, 1.0);
}

std::string corridor_at(const Floor& f, Vec2 p) {
  for (const auto& w : f.walkable) {
    if (w.kind == "main_corridor" && point_in_polygon(w.polygon, p)) return w.id;
  }
  return {};
}

std::string nearest_corridor(const Floor& f, Vec2 p) {
  std::string best;
  double best_d = 1e300;
  for (const auto& w : f.walkable) {
    if (w.kind != "main_corridor") continue;
    double d = point_in_polygon(w.polygon, p) ? 0.0 : 1e300;
    for (std::size_t i = 0; i < w.polygon.size() && d > 0.0; ++i) {
      d = std::min(d, distance_to_segment(p, {w.polygon[i], w.polygon[(i + 1) % w.polygon.size()]}));
    }
    if (d < best_d) {
      best_d = d;
      best = w.id;
    }
  }
  return best;
}

bool in_zone(const BuildingSpec& spec, ZonePurpose purpose, int floor, Vec2 p) {
  for (const auto& z : spec.zones) {
    if (z.purpose == purpose && z.floor == floor && z.contains(p)) return true;
  }
  return false;
}

}  // namespace

double estimate_eye_height(const SessionLog& log, const BuildingSpec& spec) {
  if (log.samples.empty()) throw ParseError("log has no samples");
  const double z = log.samples.front().z_cm;
  for (const auto& f : spec.floors) {
    const double eye = z - f.z_cm;
    if (eye >= kMinEyeHeightCm - 1e-3 && eye <= kMaxEyeHeightCm + 1e-3) return eye;
  }
  throw ParseError("first sample z does not correspond to a valid eye height above any floor");
}

std::vector<AssignmentSplit> split_by_assignment(const SessionLog& log, const BuildingSpec& spec) {
  std::vector<AssignmentSplit> out;
  if (log.samples.empty()) return out;
  const double eye = estimate_eye_height(log, spec);

  struct Span {
    int k;
    std::int64_t start;
    std::optional<std::int64_t> end;
  };
  std::vector<Span> spans;
  for (const auto& e : events_of(log)) {
    if (e.name != "assignment_start" && e.name != "assignment_complete") continue;
    long long k = 0;
    if (!csv::parse_int(e.detail, k)) throw ParseError("event " + e.name + " has a bad assignment id '" + e.detail + "'");
    if (e.name == "assignment_start") {
      const int expected = spans.empty() ? 1 : spans.back().k + 1;
      if (k != expected || (!spans.empty() && !spans.back().end)) {
        throw ParseError("unmatched assignment_start " + e.detail + " at t=" + std::to_string(e.t_ms));
      }
      spans.push_back({static_cast<int>(k), e.t_ms, std::nullopt});
    } else {
      if (spans.empty() || spans.back().k != k || spans.back().end) {
        throw ParseError("unmatched assignment_complete " + e.detail + " at t=" + std::to_string(e.t_ms));
      }
      spans.back().end = e.t_ms;
    }
  }

  auto index_of = [&](std::int64_t t) {
    auto it = std::lower_bound(log.samples.begin(), log.samples.end(), t,
                               [](const TelemetrySample& s, std::int64_t v) { return s.t_ms < v; });
    if (it == log.samples.end() || it->t_ms != t) {
      throw ParseError("event at t=" + std::to_string(t) + " has no matching sample");
    }
    return static_cast<std::size_t>(it - log.samples.begin());
  };

  for (std::size_t i = 0; i < spans.size(); ++i) {
    const std::size_t begin = index_of(spans[i].start);
    if (i == 0 && begin != 0) throw ParseError("first assignment does not start at the first sample");
    const std::size_t end = i + 1 < spans.size() ? index_of(spans[i + 1].start) : log.samples.size();
    if (spans[i].end) index_of(*spans[i].end);
    AssignmentSplit s;
    s.assignment = spans[i].k;
    s.samples.assign(log.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     log.samples.begin() + static_cast<std::ptrdiff_t>(end));
    s.start_ms = spans[i].start;
    s.complete = spans[i].end.has_value();
    s.end_ms = s.complete ? *spans[i].end : log.samples[end - 1].t_ms;
    s.eye_height_cm = eye;
    out.push_back(std::move(s));
  }
  return out;
}

// Welford update: constant input yields exactly mean = x and sd = 0.
Stat describe(const std::vector<double>& xs) {
  Stat s;
  double m2 = 0.0;
  for (double x : xs) {
    ++s.n;
    const double d = x - s.mean;
    s.mean += d / static_cast<double>(s.n);
    m2 += d * (x - s.mean);
  }
  if (s.n > 1) s.sd = std::sqrt(m2 / static_cast<double>(s.n - 1));
  return s;
}

std::map<int, double> time_spent(const std::vector<AssignmentSplit>& splits) {
  std::map<int, double> out;
  for (const auto& s : splits) {
    if (s.complete) out[s.assignment] = static_cast<double>(s.end_ms - s.start_ms) / 1000.0;
  }
  return out;
}

CohortTimes cohort_time_spent(const std::vector<std::vector<AssignmentSplit>>& sessions) {
  std::map<int, std::vector<double>> per;
  std::vector<double> totals;
  for (const auto& splits : sessions) {
    const auto t = time_spent(splits);
    for (const auto& [k, v] : t) per[k].push_back(v);
    if (!splits.empty() && t.size() == splits.size() && splits.size() == 4) {
      double sum = 0.0;
      for (const auto& [k, v] : t) sum += v;
      totals.push_back(sum);
    }
  }
  CohortTimes out;
  for (const auto& [k, v] : per) out.per_assignment[k] = describe(v);
  out.total = describe(totals);
  return out;
}

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::central_point: return "central_point";
    case StrategyKind::direction: return "direction";
    case StrategyKind::floor: return "floor";
    case StrategyKind::mixed: return "mixed";
  }
  return "mixed";
}

StrategyLabel classify_strategy(const AssignmentSplit& split, const World& world, const StrategyThresholds& th) {
  StrategyLabel out;
  if (split.samples.size() < 2) return out;
  const BuildingSpec& spec = world.spec();
  std::vector<Vec3> g;
  g.reserve(split.samples.size());
  for (const auto& s : split.samples) g.push_back(ground_of(s, split.eye_height_cm));
  const Vec3 s = g.front(), e = g.back();
  const int sf = spec.floor_at_z(s.z), ef = spec.floor_at_z(e.z);

  const double arc = polyline_length(g);
  PathOptions exact;
  const double shortest = world.mesh().path({sf, s}, {ef, e}, exact).length_cm;
  out.detour_ratio = shortest > 1e-9 ? arc / shortest : 1.0;
  for (const auto& p : g) {
    if (at_floor_level(spec, p.z) && in_zone(spec, ZonePurpose::central_point, spec.floor_at_z(p.z), p.xy())) {
      out.visited_central = true;
      break;
    }
  }

  if (sf != ef) {
    const double dz = e.z - s.z;
    std::size_t i = 0;
    while (i + 1 < g.size() && std::abs(g[i].z - s.z) < 0.5 * std::abs(dz)) ++i;
    out.h_star = axis_fraction(g[i].xy(), s.xy(), e.xy());
    if (out.detour_ratio >= th.central_detour && out.visited_central) {
      out.label = StrategyKind::central_point;
    } else if (*out.h_star >= th.direction_h) {
      out.label = StrategyKind::direction;
    } else if (*out.h_star <= th.floor_h) {
      out.label = StrategyKind::floor;
    }
    return out;
  }

  const Floor& floor = spec.floor(sf);
  const std::string from = nearest_corridor(floor, s.xy());
  const std::string to = nearest_corridor(floor, e.xy());
  if (from.empty() || from == to) return out;
  std::size_t last_from = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!at_floor_level(spec, g[i].z) || spec.floor_at_z(g[i].z) != sf) continue;
    const std::string c = corridor_at(floor, g[i].xy());
    if (c == from) last_from = i;
    if (c.empty() || c == from) continue;
    out.switch_fraction = axis_fraction(g[i].xy(), s.xy(), e.xy());
    for (std::size_t j = last_from; j <= i; ++j) {
      if (in_zone(spec, ZonePurpose::wide_intersection, sf, g[j].xy())) out.switch_in_wide = true;
    }
    break;
  }
  if (!out.switch_fraction) return out;
  if (out.switch_in_wide && out.detour_ratio >= th.switch_central_detour) {
    out.label = StrategyKind::central_point;
  } else if (*out.switch_fraction <= th.switch_direction) {
    out.label = StrategyKind::direction;
  }
  return out;
}

StrategyKind session_strategy(const std::map<int, StrategyLabel>& labels) {
  auto get = [&](int k) -> std::optional<StrategyKind> {
    auto it = labels.find(k);
    if (it == labels.end()) return std::nullopt;
    return it->second.label;
  };
  const auto a2 = get(2), a3 = get(3);
  if (a2 == StrategyKind::central_point || a3 == StrategyKind::central_point) return StrategyKind::central_point;
  if (a2) return *a2;
  if (a3) return *a3;
  return StrategyKind::mixed;
}

std::vector<std::string> staircases_used(const AssignmentSplit& split, const World& world) {
  std::vector<std::string> out;
  const BuildingSpec& spec = world.spec();
  const auto& ramps = world.ramps();
  const auto& links = world.mesh().links();
  for (const auto& s : split.samples) {
    const Vec3 g = ground_of(s, split.eye_height_cm);
    if (at_floor_level(spec, g.z)) continue;
    for (std::size_t i = 0; i < ramps.size(); ++i) {
      const RampFrame& r = ramps[i];
      const double a = r.along(g.xy());
      if (a < -1.0 || a > r.length + 1.0 || std::abs(r.lateral(g.xy())) > r.half_width + 1.0) continue;
      if (std::abs(r.z_at(std::clamp(a, 0.0, r.length)) - g.z) > 1.0) continue;
      if (out.empty() || out.back() != links[i].staircase) out.push_back(links[i].staircase);
      break;
    }
  }
  return out;
}

ChoiceTally choice_tally(const std::vector<SessionLog>& logs, const World& world) {
  ChoiceTally t;
  for (const auto& e : world.spec().exits) t.exits[e.label] = 0;
  for (const auto& s : world.spec().staircases) t.staircases[s.label] = 0;
  for (const auto& log : logs) {
    std::optional<std::string> exit;
    bool finished = false;
    for (const auto& e : events_of(log)) {
      if (e.name == "exit_reached") exit = e.detail;
      if (e.name == "session_finished") finished = true;
    }
    if (!finished || !exit) {
      ++t.excluded;
      continue;
    }
    const auto splits = split_by_assignment(log, world.spec());
    ++t.completed;
    ++t.exits[*exit];
    for (const auto& sp : splits) {
      std::vector<std::string> used = staircases_used(sp, world);
      std::sort(used.begin(), used.end());
      used.erase(std::unique(used.begin(), used.end()), used.end());
      for (const auto& u : used) ++t.staircases[u];
    }
    const AssignmentSplit& evac = splits.back();
    const Vec3 g = ground_of(evac.samples.front(), evac.eye_height_cm);
    if (nearest_exit(world, {world.spec().floor_at_z(g.z), g}) == *exit) ++t.nearest_agreement;
  }
  t.nearest_exit_agreement = t.completed ? static_cast<double>(t.nearest_agreement) / t.completed : 0.0;
  return t;
}

std::int64_t HeatmapGrid::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

int gaze_floor(const BuildingSpec& spec, double gaze_z) {
  int best = spec.floors.front().id;
  double best_z = -1e300;
  for (const auto& f : spec.floors) {
    if (f.z_cm <= gaze_z + 1e-6 && f.z_cm > best_z) {
      best_z = f.z_cm;
      best = f.id;
    }
  }
  return best;
}

HeatmapGrid gaze_heatmap(const std::vector<SessionLog>& logs, const BuildingSpec& spec, int floor, double cell_cm) {
  if (!(cell_cm >= 10.0 && cell_cm <= 200.0)) throw InvalidArgument("heatmap cell size must be within [10, 200] cm");
  const auto [lo, hi] = spec.floor(floor).bounds();
  HeatmapGrid grid;
  grid.floor = floor;
  grid.cell_cm = cell_cm;
  grid.origin = lo;
  grid.nx = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / cell_cm)));
  grid.ny = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / cell_cm)));
  grid.counts.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
  for (const auto& log : logs) {
    for (const auto& s : log.samples) {
      if (!s.gaze || gaze_floor(spec, s.gaze->z) != floor) continue;
      const int ix = std::clamp(static_cast<int>(std::floor((s.gaze->x - lo.x) / cell_cm)), 0, grid.nx - 1);
      const int iy = std::clamp(static_cast<int>(std::floor((s.gaze->y - lo.y) / cell_cm)), 0, grid.ny - 1);
      ++grid.counts[static_cast<std::size_t>(iy) * grid.nx + ix];
    }
  }
  return grid;
}

std::map<int, std::map<std::string, std::int64_t>> gaze_target_tally(const std::vector<SessionLog>& logs) {
  std::map<int, std::map<std::string, std::int64_t>> out;
  for (const auto& log : logs) {
    for (const auto& s : log.samples) {
      const auto colon = s.gaze_target.find(':');
      ++out[s.assignment][colon == std::string::npos ? s.gaze_target : s.gaze_target.substr(0, colon)];
    }
  }
  return out;
}

SpeedStats speed_stats(const std::vector<TelemetrySample>& samples) {
  if (samples.size() < 2) throw InvalidArgument("speed statistics need at least two samples");
  SpeedStats st;
  st.histogram.assign(static_cast<std::size_t>(std::ceil(kSpeedCmPerS / st.bin_cm_s)), 0);
  double sum = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto& a = samples[i - 1];
    const auto& b = samples[i];
    const double dt = static_cast<double>(b.t_ms - a.t_ms) / 1000.0;
    const double v = std::hypot(b.x_cm - a.x_cm, b.y_cm - a.y_cm) / dt;
    sum += v;
    st.max = std::max(st.max, v);
    const auto bin = std::min(static_cast<std::size_t>(v / st.bin_cm_s), st.histogram.size() - 1);
    ++st.histogram[bin];
  }
  st.mean = sum / static_cast<double>(samples.size() - 1);
  return st;
}

// ---------------------------------------------------------------------------
// CSV output

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

std::string fmt(double v) { return csv::fixed3(v); }

}  // namespace

void write_analysis(const std::vector<SessionLog>& logs, const World& world, const std::filesystem::path& out_dir,
                    double cell_cm) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<AssignmentSplit>> all;
  for (const auto& log : logs) all.push_back(split_by_assignment(log, world.spec()));

  {
    std::ofstream out = open_out(out_dir / "time_spent.csv");
    out << "participant,assignment,seconds\n";
    for (std::size_t i = 0; i < logs.size(); ++i) {
      for (const auto& [k, v] : time_spent(all[i])) {
        out << csv::join({logs[i].participant_id, std::to_string(k), fmt(v)}) << '\n';
      }
    }
    const CohortTimes c = cohort_time_spent(all);
    for (const auto& [k, s] : c.per_assignment) {
      out << csv::join({"mean", std::to_string(k), fmt(s.mean)}) << '\n';
      out << csv::join({"sd", std::to_string(k), fmt(s.sd)}) << '\n';
    }
    out << csv::join({"mean", "total", fmt(c.total.mean)}) << '\n';
    out << csv::join({"sd", "total", fmt(c.total.sd)}) << '\n';
  }
  {
    std::ofstream out = open_out(out_dir / "strategies.csv");
    out << "participant,assignment,label,h_star,detour_ratio,visited_central,switch_fraction,session_label\n";
    for (std::size_t i = 0; i < logs.size(); ++i) {
      std::map<int, StrategyLabel> labels;
      for (const auto& sp : all[i]) {
        if (sp.complete) labels[sp.assignment] = classify_strategy(sp, world);
      }
      const std::string session(to_string(session_strategy(labels)));
      for (const auto& [k, l] : labels) {
        out << csv::join({logs[i].participant_id, std::to_string(k), std::string(to_string(l.label)),
                          l.h_star ? fmt(*l.h_star) : "", fmt(l.detour_ratio), l.visited_central ? "1" : "0",
                          l.switch_fraction ? fmt(*l.switch_fraction) : "", session})
            << '\n';
      }
    }
  }
  {
    const ChoiceTally t = choice_tally(logs, world);
    std::ofstream out = open_out(out_dir / "choices.csv");
    out << "category,label,count\n";
    for (const auto& [k, v] : t.exits) out << csv::join({"exit", k, std::to_string(v)}) << '\n';
    for (const auto& [k, v] : t.staircases) out << csv::join({"staircase", k, std::to_string(v)}) << '\n';
    out << csv::join({"sessions", "completed", std::to_string(t.completed)}) << '\n';
    out << csv::join({"sessions", "excluded", std::to_string(t.excluded)}) << '\n';
    out << csv::join({"nearest_exit_agreement", "fraction", fmt(t.nearest_exit_agreement)}) << '\n';
  }
  {
    std::ofstream out = open_out(out_dir / "gaze_targets.csv");
    out << "assignment,target_kind,count\n";
    for (const auto& [k, m] : gaze_target_tally(logs)) {
      for (const auto& [kind, n] : m) out << csv::join({std::to_string(k), kind, std::to_string(n)}) << '\n';
    }
  }
  for (const auto& f : world.spec().floors) {
    const HeatmapGrid g = gaze_heatmap(logs, world.spec(), f.id, cell_cm);
    std::ofstream out = open_out(out_dir / ("heatmap_floor" + std::to_string(f.id) + ".csv"));
    out << "# origin_x_cm=" << fmt(g.origin.x) << " origin_y_cm=" << fmt(g.origin.y) << " cell_cm=" << fmt(g.cell_cm)
        << " nx=" << g.nx << " ny=" << g.ny << '\n';
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) {
        if (ix) out << ',';
        out << g.at(ix, iy);
      }
      out << '\n';
    }
  }
}

}  // namespace wayfind
