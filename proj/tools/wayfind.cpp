// Command-line entry point: simulate, serve, analyze, score, replay-export.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "wayfind/agents.hpp"
#include "wayfind/analysis.hpp"
#include "wayfind/building.hpp"
#include "wayfind/error.hpp"
#include "wayfind/questionnaires.hpp"
#include "wayfind/server.hpp"

namespace fs = std::filesystem;
using namespace wayfind;

namespace {

Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + p.string());
}

bool is_log_file(const fs::path& p) {
  const std::string name = p.filename().string();
  auto ends_with = [&](std::string_view s) {
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return name.rfind("participant_", 0) == 0 && ends_with(".csv") && !ends_with(".events.csv") &&
         !ends_with(".trace.csv");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

struct Options {
  std::string fixture;
  // simulate
  std::string policy = "mixed";
  int n = 1;
  std::uint64_t seed = 1;
  double noise = 30.0;
  std::string out;
  // serve
  int port = 8765;
  std::string bind = "127.0.0.1";
  double idle_timeout = 120.0;
  std::string navmesh_dump;
  // analyze
  std::string logs;
  double cell = 25.0;
  // score
  std::string responses;
  std::string instrument;
  std::string instruments_dir;
  std::string per_participant;
  // replay-export
  std::string log;
};

World load_world(const Options& o) {
  return World(load_building_file(o.fixture.empty() ? default_fixture_path() : o.fixture));
}

int cmd_simulate(const Options& o) {
  const World world = load_world(o);
  std::vector<PolicySpec> mix;
  if (o.policy == "mixed") {
    for (auto k : {PolicyKind::central_point, PolicyKind::direction, PolicyKind::floor, PolicyKind::nearest_exit}) {
      mix.push_back({k, 0, o.noise});
    }
  } else {
    mix.push_back({policy_kind_from(o.policy), 0, o.noise});
  }
  const auto runs = generate_cohort(world, o.n, mix, o.seed);
  fs::create_directories(o.out);
  for (const auto& r : runs) {
    write_log(r.log, o.out);
    write_trace(r.trace, o.out);
  }
  std::printf("wrote %zu sessions to %s\n", runs.size(), o.out.c_str());
  return 0;
}

int cmd_serve(const Options& o) {
  const World world = load_world(o);
  if (!o.navmesh_dump.empty()) write_file(o.navmesh_dump, world.mesh().dump_json());
  ServerOptions so;
  so.bind_address = o.bind;
  so.port = o.port;
  so.out_dir = o.out.empty() ? "sessions" : o.out;
  so.idle_timeout_s = o.idle_timeout;
  so.base_seed = o.seed;
  Server server(world, so);
  const int port = server.start();
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on %s:%d, fixture %s\n", o.bind.c_str(), port, world.spec().hash.c_str());
  std::fflush(stdout);
  server.run();
  g_server = nullptr;
  return 0;
}

int cmd_analyze(const Options& o) {
  const World world = load_world(o);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.logs)) {
    if (e.is_regular_file() && is_log_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no participant logs in " + o.logs);
  std::vector<SessionLog> logs;
  for (const auto& f : files) logs.push_back(parse_log(f));
  write_analysis(logs, world, o.out, o.cell);
  std::printf("analyzed %zu logs into %s\n", logs.size(), o.out.c_str());
  return 0;
}

int cmd_score(const Options& o) {
  const InstrumentDefinition inst = o.instruments_dir.empty()
                                        ? load_bundled_instrument(o.instrument)
                                        : load_instrument_file(fs::path(o.instruments_dir) / (o.instrument + ".json"));
  std::vector<ScoreReport> reports;
  for (const auto& r : parse_responses(read_file(o.responses))) {
    if (r.instrument == inst.id) reports.push_back(score(inst, r));
  }
  if (reports.empty()) throw InvalidArgument("no " + inst.id + " responses in " + o.responses);

  std::string table = "measure,mean,sd\n";
  for (const auto& row : summarize_cohort(reports)) table += row.measure + "," + fmt(row.mean) + "," + fmt(row.sd) + "\n";
  write_file(o.out, table);

  if (!o.per_participant.empty()) {
    std::string rows = "participant_id,measure,value,band\n";
    for (const auto& r : reports) {
      for (const auto& [name, v] : r.subscales) rows += r.participant_id + "," + name + "," + fmt(v) + ",\n";
      if (r.total) rows += r.participant_id + ",total," + fmt(*r.total) + "," + r.band.value_or("") + "\n";
      if (!r.total) {
        for (const auto& [id, v] : r.items) rows += r.participant_id + "," + id + "," + fmt(v) + ",\n";
      }
    }
    write_file(o.per_participant, rows);
  }
  std::printf("scored %zu %s responses\n", reports.size(), inst.id.c_str());
  return 0;
}

int cmd_replay_export(const Options& o) {
  const World world = load_world(o);
  const SessionLog log = parse_log(o.log);
  write_file(o.out, replay_document(log, world.spec().hash).dump(1) + "\n");
  std::printf("exported %zu trajectory points to %s\n", log.samples.size(), o.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wayfind: virtual-building wayfinding experiments"};
  app.require_subcommand(1);
  Options o;
  auto fixture_opt = [&](CLI::App* sub) {
    sub->add_option("--fixture", o.fixture, "Building fixture (default: $WAYFIND_FIXTURE or the bundled fixture)");
  };

  auto* sim = app.add_subcommand("simulate", "Run scripted sessions headlessly");
  sim->add_option("--policy", o.policy, "central_point, direction, floor, nearest_exit or mixed")
      ->check(CLI::IsMember({"central_point", "direction", "floor", "nearest_exit", "mixed"}));
  sim->add_option("--n", o.n, "Number of sessions")->check(CLI::PositiveNumber);
  sim->add_option("--seed", o.seed, "Base jitter seed");
  sim->add_option("--noise", o.noise, "Waypoint noise in cm")->check(CLI::Range(0.0, 100.0));
  sim->add_option("--out", o.out, "Output directory")->required();
  fixture_opt(sim);

  auto* serve = app.add_subcommand("serve", "Host live sessions over TCP");
  serve->add_option("--port", o.port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--bind", o.bind, "Bind address");
  serve->add_option("--out", o.out, "Session output directory");
  serve->add_option("--idle-timeout", o.idle_timeout, "Seconds without input before abort (<= 0 disables)");
  serve->add_option("--seed", o.seed, "First session seed");
  serve->add_option("--navmesh-dump", o.navmesh_dump, "Write the navigation mesh as JSON and continue");
  fixture_opt(serve);

  auto* analyze = app.add_subcommand("analyze", "Analyze a directory of telemetry logs");
  analyze->add_option("--logs", o.logs, "Directory of participant logs")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--out", o.out, "Output directory")->required();
  analyze->add_option("--cell", o.cell, "Heatmap cell size in cm")->check(CLI::Range(10.0, 200.0));
  fixture_opt(analyze);

  auto* sc = app.add_subcommand("score", "Score questionnaire responses");
  sc->add_option("--responses", o.responses, "Responses CSV")->required()->check(CLI::ExistingFile);
  sc->add_option("--instrument", o.instrument, "Instrument id")->required();
  sc->add_option("--out", o.out, "Cohort table CSV (measure,mean,sd)")->required();
  sc->add_option("--per-participant", o.per_participant, "Per-participant scores CSV");
  sc->add_option("--instruments-dir", o.instruments_dir, "Directory of instrument definitions");

  auto* rx = app.add_subcommand("replay-export", "Export a telemetry log as a replay document");
  rx->add_option("--log", o.log, "Telemetry CSV")->required()->check(CLI::ExistingFile);
  rx->add_option("--out", o.out, "Replay JSON")->required();
  fixture_opt(rx);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*serve) return cmd_serve(o);
    if (*analyze) return cmd_analyze(o);
    if (*sc) return cmd_score(o);
    if (*rx) return cmd_replay_export(o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
