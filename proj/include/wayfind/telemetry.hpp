#pragma once

// Per-participant logs: a 10 Hz telemetry CSV, an events CSV and a full-rate
// input trace that makes the session replayable bit for bit.
//
// In-memory samples keep full precision; files carry three decimals. The
// round-trip contract is parse(write(x)) == quantize(x), and quantize is
// idempotent.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "wayfind/simulation.hpp"

namespace wayfind {

inline constexpr const char* kLogHeader =
    "t_ms,x_cm,y_cm,z_cm,yaw_deg,pitch_deg,roll_deg,gaze_x_cm,gaze_y_cm,gaze_z_cm,gaze_target,assignment,event";
inline constexpr const char* kTraceHeader = "tick,move_held,yaw_deg,pitch_deg,roll_deg";
inline constexpr const char* kEventsHeader = "t_ms,event,detail";

struct TelemetrySample {
  std::int64_t t_ms = 0;
  double x_cm = 0.0, y_cm = 0.0, z_cm = 0.0;
  double yaw_deg = 0.0, pitch_deg = 0.0, roll_deg = 0.0;
  std::optional<Vec3> gaze;
  std::string gaze_target = "none";
  int assignment = 0;  // active assignment id, 0 after the session finished
  std::string event;   // ';'-joined event tags raised at t_ms

  Vec3 pos() const { return {x_cm, y_cm, z_cm}; }
  bool operator==(const TelemetrySample&) const = default;
};

struct SessionLog {
  std::string participant_id;
  std::vector<TelemetrySample> samples;
  std::vector<Event> events;
};

/// Tag written into the sample's event column: "name detail", or the bare
/// name for alarm_on and detail-less events.
std::string event_tag(const Event& e);

TelemetrySample sample(const AgentState& agent, const SessionState& session, const GazeHit& gaze,
                       std::string event = {});

/// Rounds every numeric field exactly as the CSV writer prints it.
TelemetrySample quantize(const TelemetrySample& s);

std::string format_row(const TelemetrySample& s);
TelemetrySample parse_row(const std::string& line, std::size_t row);

std::string log_filename(const std::string& participant);
std::string events_filename(const std::string& participant);
std::string trace_filename(const std::string& participant);

/// Writes participant_<id>.csv and participant_<id>.events.csv.
/// Throws IoError when a target exists and overwrite is false.
std::filesystem::path write_log(const SessionLog& log, const std::filesystem::path& dir, bool overwrite = false);

/// Parses a telemetry CSV; the events sidecar next to it is read when present.
SessionLog parse_log(const std::filesystem::path& file);
SessionLog parse_log_text(const std::string& text, const std::string& participant = {});
std::vector<Event> parse_events_text(const std::string& text);

struct TraceHeader {
  std::string fixture_hash;
  double eye_height_cm = 170.0;
  std::uint64_t seed = 0;
  std::string participant;
};

struct InputTrace {
  TraceHeader header;
  std::vector<InputFrame> frames;
};

std::string format_trace(const InputTrace& trace);
InputTrace parse_trace_text(const std::string& text);
std::filesystem::path write_trace(const InputTrace& trace, const std::filesystem::path& dir, bool overwrite = false);
InputTrace parse_trace(const std::filesystem::path& file);

/// Streams the three files of one session as it runs. Rows are flushed on
/// every event and at least every 10 rows.
class LogWriter {
 public:
  LogWriter(const std::filesystem::path& dir, const std::string& participant, const TraceHeader& header,
            bool overwrite = false);

  void sample(const TelemetrySample& s);
  void event(const Event& e);
  void frame(std::uint64_t tick, const InputFrame& f);
  void flush();

  const std::filesystem::path& log_path() const { return log_path_; }

 private:
  std::filesystem::path log_path_;
  std::ofstream log_, events_, trace_;
  int unflushed_ = 0;
};

/// Drives one session and records samples, events and the input trace.
class Recorder {
 public:
  Recorder(const World& world, std::string participant, double eye_height_cm, std::uint64_t seed,
           std::vector<Assignment> protocol = default_protocol());

  void step(const InputFrame& in);
  /// Mirrors everything recorded so far, and everything after, into files.
  void attach(LogWriter* writer);

  const World& world() const { return *world_; }
  const AgentState& agent() const { return agent_; }
  const SessionState& session() const { return session_; }
  const SessionLog& log() const { return log_; }
  const InputTrace& trace() const { return trace_; }
  bool finished() const { return session_.finished(); }

 private:
  void record_sample();

  const World* world_;
  AgentState agent_;
  SessionState session_;
  SessionLog log_;
  InputTrace trace_;
  std::size_t events_seen_ = 0;
  LogWriter* writer_ = nullptr;
};

/// Re-runs a recorded trace. Throws MismatchError when the trace was made
/// against a different building.
SessionLog replay(const World& world, const InputTrace& trace);

}  // namespace wayfind
