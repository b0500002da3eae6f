#include "wayfind/telemetry.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

#include "wayfind/csv.hpp"
#include "wayfind/error.hpp"

namespace wayfind {

namespace fs = std::filesystem;

std::string event_tag(const Event& e) {
  if (e.detail.empty() || e.name == "alarm_on") return e.name;
  return e.name + " " + e.detail;
}

TelemetrySample sample(const AgentState& agent, const SessionState& session, const GazeHit& gaze, std::string event) {
  TelemetrySample s;
  s.t_ms = session.clock_ms;
  s.x_cm = agent.pos.x;
  s.y_cm = agent.pos.y;
  s.z_cm = agent.pos.z;
  s.yaw_deg = agent.yaw;
  s.pitch_deg = agent.pitch;
  s.roll_deg = agent.roll;
  if (gaze.hit()) s.gaze = gaze.point;
  s.gaze_target = gaze.label();
  s.assignment = session.active_id();
  s.event = std::move(event);
  return s;
}

namespace {

double q3(double v) {
  double out = 0.0;
  csv::parse_double(csv::fixed3(v), out);
  return out;
}

void check_participant(const std::string& id) {
  if (id.empty()) throw InvalidArgument("participant id must not be empty");
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) throw InvalidArgument("participant id may only contain letters, digits, '_' and '-': " + id);
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_new(const fs::path& p, bool overwrite) {
  if (!overwrite && fs::exists(p)) throw IoError("refusing to overwrite existing " + p.string());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

double num(const std::vector<std::string>& f, std::size_t col, std::size_t row, const char* name) {
  double v = 0.0;
  if (!csv::parse_double(f[col], v) || !std::isfinite(v)) {
    throw ParseError("row " + std::to_string(row) + ": bad numeric value in column " + name + ": '" + f[col] + "'");
  }
  return v;
}

}  // namespace

TelemetrySample quantize(const TelemetrySample& s) {
  TelemetrySample q = s;
  q.x_cm = q3(s.x_cm);
  q.y_cm = q3(s.y_cm);
  q.z_cm = q3(s.z_cm);
  q.yaw_deg = q3(s.yaw_deg);
  q.pitch_deg = q3(s.pitch_deg);
  q.roll_deg = q3(s.roll_deg);
  if (s.gaze) q.gaze = Vec3{q3(s.gaze->x), q3(s.gaze->y), q3(s.gaze->z)};
  return q;
}

std::string format_row(const TelemetrySample& s) {
  std::vector<std::string> f;
  f.reserve(13);
  f.push_back(std::to_string(s.t_ms));
  for (double v : {s.x_cm, s.y_cm, s.z_cm, s.yaw_deg, s.pitch_deg, s.roll_deg}) f.push_back(csv::fixed3(v));
  if (s.gaze) {
    for (double v : {s.gaze->x, s.gaze->y, s.gaze->z}) f.push_back(csv::fixed3(v));
  } else {
    f.insert(f.end(), 3, std::string());
  }
  f.push_back(s.gaze_target);
  f.push_back(std::to_string(s.assignment));
  f.push_back(s.event);
  return csv::join(f);
}

TelemetrySample parse_row(const std::string& line, std::size_t row) {
  const auto f = csv::split(line);
  if (f.size() != 13) {
    throw ParseError("row " + std::to_string(row) + ": expected 13 fields, got " + std::to_string(f.size()));
  }
  TelemetrySample s;
  long long t = 0;
  if (!csv::parse_int(f[0], t)) throw ParseError("row " + std::to_string(row) + ": bad numeric value in column t_ms");
  s.t_ms = t;
  s.x_cm = num(f, 1, row, "x_cm");
  s.y_cm = num(f, 2, row, "y_cm");
  s.z_cm = num(f, 3, row, "z_cm");
  s.yaw_deg = num(f, 4, row, "yaw_deg");
  s.pitch_deg = num(f, 5, row, "pitch_deg");
  s.roll_deg = num(f, 6, row, "roll_deg");
  const bool blank = f[7].empty() && f[8].empty() && f[9].empty();
  if (!blank) s.gaze = Vec3{num(f, 7, row, "gaze_x_cm"), num(f, 8, row, "gaze_y_cm"), num(f, 9, row, "gaze_z_cm")};
  s.gaze_target = f[10];
  long long a = 0;
  if (!csv::parse_int(f[11], a) || a < 0 || a > 4) {
    throw ParseError("row " + std::to_string(row) + ": bad assignment value '" + f[11] + "'");
  }
  s.assignment = static_cast<int>(a);
  s.event = f[12];
  return s;
}

std::string log_filename(const std::string& participant) {
  check_participant(participant);
  return "participant_" + participant + ".csv";
}
std::string events_filename(const std::string& participant) {
  check_participant(participant);
  return "participant_" + participant + ".events.csv";
}
std::string trace_filename(const std::string& participant) {
  check_participant(participant);
  return "participant_" + participant + ".trace.csv";
}

fs::path write_log(const SessionLog& log, const fs::path& dir, bool overwrite) {
  const fs::path lp = dir / log_filename(log.participant_id);
  const fs::path ep = dir / events_filename(log.participant_id);
  if (!overwrite && (fs::exists(lp) || fs::exists(ep))) {
    throw IoError("refusing to overwrite existing log for participant " + log.participant_id);
  }
  std::ofstream out = open_new(lp, true);
  out << kLogHeader << '\n';
  for (const auto& s : log.samples) out << format_row(s) << '\n';
  std::ofstream ev = open_new(ep, true);
  ev << kEventsHeader << '\n';
  for (const auto& e : log.events) ev << csv::join({std::to_string(e.t_ms), e.name, e.detail}) << '\n';
  out.flush();
  ev.flush();
  if (!out || !ev) throw IoError("write failed for participant " + log.participant_id);
  return lp;
}

SessionLog parse_log_text(const std::string& text, const std::string& participant) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kLogHeader) throw ParseError("malformed header: expected '" + std::string(kLogHeader) + "'");
  SessionLog log;
  log.participant_id = participant;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    TelemetrySample s = parse_row(lines[i], i);
    if (!log.samples.empty() && s.t_ms <= log.samples.back().t_ms) {
      throw ParseError("row " + std::to_string(i) + ": timestamp " + std::to_string(s.t_ms) + " does not increase");
    }
    log.samples.push_back(std::move(s));
  }
  return log;
}

std::vector<Event> parse_events_text(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != kEventsHeader) throw ParseError("malformed events header");
  std::vector<Event> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    long long t = 0;
    if (f.size() != 3 || !csv::parse_int(f[0], t)) throw ParseError("events row " + std::to_string(i) + ": malformed");
    out.push_back({t, f[1], f[2]});
  }
  return out;
}

SessionLog parse_log(const fs::path& file) {
  std::string id = file.filename().string();
  if (id.rfind("participant_", 0) == 0 && id.size() > 16 && id.substr(id.size() - 4) == ".csv") {
    id = id.substr(12, id.size() - 16);
  }
  SessionLog log = parse_log_text(read_file(file), id);
  const fs::path ep = file.parent_path() / ("participant_" + id + ".events.csv");
  if (fs::exists(ep)) log.events = parse_events_text(read_file(ep));
  return log;
}

// ---------------------------------------------------------------------------
// Input traces

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_preamble(const TraceHeader& h) {
  return "# fixture_hash=" + h.fixture_hash + " eye_height_cm=" + g17(h.eye_height_cm) +
         " seed=" + std::to_string(h.seed) + " participant=" + h.participant;
}

std::string trace_row(std::uint64_t tick, const InputFrame& f) {
  return std::to_string(tick) + "," + (f.move_held ? "1" : "0") + "," + g17(f.yaw) + "," + g17(f.pitch) + "," +
         g17(f.roll);
}

}  // namespace

std::string format_trace(const InputTrace& trace) {
  std::string out = trace_preamble(trace.header) + "\n" + kTraceHeader + "\n";
  for (std::size_t i = 0; i < trace.frames.size(); ++i) out += trace_row(i + 1, trace.frames[i]) + "\n";
  return out;
}

InputTrace parse_trace_text(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.size() < 2 || lines[0].rfind("# ", 0) != 0) throw ParseError("trace: missing preamble line");
  InputTrace t;
  std::istringstream pre(lines[0].substr(2));
  std::string kv;
  while (pre >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("trace: malformed preamble entry '" + kv + "'");
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "fixture_hash") {
      t.header.fixture_hash = v;
    } else if (k == "eye_height_cm") {
      if (!csv::parse_double(v, t.header.eye_height_cm)) throw ParseError("trace: bad eye_height_cm");
    } else if (k == "seed") {
      long long s = 0;
      if (!csv::parse_int(v, s)) throw ParseError("trace: bad seed");
      t.header.seed = static_cast<std::uint64_t>(s);
    } else if (k == "participant") {
      t.header.participant = v;
    }
  }
  if (lines[1] != kTraceHeader) throw ParseError("trace: malformed header");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    long long tick = 0;
    InputFrame in;
    if (f.size() != 5 || !csv::parse_int(f[0], tick) || (f[1] != "0" && f[1] != "1") ||
        !csv::parse_double(f[2], in.yaw) || !csv::parse_double(f[3], in.pitch) || !csv::parse_double(f[4], in.roll)) {
      throw ParseError("trace row " + std::to_string(i - 1) + ": malformed");
    }
    if (tick != static_cast<long long>(t.frames.size()) + 1) {
      throw ParseError("trace row " + std::to_string(i - 1) + ": tick out of sequence");
    }
    in.move_held = f[1] == "1";
    t.frames.push_back(in);
  }
  return t;
}

fs::path write_trace(const InputTrace& trace, const fs::path& dir, bool overwrite) {
  const fs::path p = dir / trace_filename(trace.header.participant);
  std::ofstream out = open_new(p, overwrite);
  out << format_trace(trace);
  out.flush();
  if (!out) throw IoError("write failed: " + p.string());
  return p;
}

InputTrace parse_trace(const fs::path& file) { return parse_trace_text(read_file(file)); }

// ---------------------------------------------------------------------------
// Streaming writer

LogWriter::LogWriter(const fs::path& dir, const std::string& participant, const TraceHeader& header, bool overwrite) {
  log_path_ = dir / log_filename(participant);
  const fs::path ep = dir / events_filename(participant);
  const fs::path tp = dir / trace_filename(participant);
  if (!overwrite && (fs::exists(log_path_) || fs::exists(ep) || fs::exists(tp))) {
    throw IoError("refusing to overwrite existing log for participant " + participant);
  }
  log_ = open_new(log_path_, true);
  events_ = open_new(ep, true);
  trace_ = open_new(tp, true);
  log_ << kLogHeader << '\n';
  events_ << kEventsHeader << '\n';
  trace_ << trace_preamble(header) << '\n' << kTraceHeader << '\n';
  flush();
}

void LogWriter::sample(const TelemetrySample& s) {
  log_ << format_row(s) << '\n';
  if (!s.event.empty() || ++unflushed_ >= 10) flush();
}

void LogWriter::event(const Event& e) {
  events_ << csv::join({std::to_string(e.t_ms), e.name, e.detail}) << '\n';
  events_.flush();
}

void LogWriter::frame(std::uint64_t tick, const InputFrame& f) { trace_ << trace_row(tick, f) << '\n'; }

void LogWriter::flush() {
  log_.flush();
  events_.flush();
  trace_.flush();
  unflushed_ = 0;
  if (!log_ || !events_ || !trace_) throw IoError("write failed: " + log_path_.string());
}

// ---------------------------------------------------------------------------
// Recorder

Recorder::Recorder(const World& world, std::string participant, double eye_height_cm, std::uint64_t seed,
                   std::vector<Assignment> protocol)
    : world_(&world) {
  init_session(world, eye_height_cm, seed, agent_, session_, std::move(protocol));
  log_.participant_id = participant;
  trace_.header = {world.spec().hash, eye_height_cm, seed, std::move(participant)};
  record_sample();
}

void Recorder::attach(LogWriter* writer) {
  writer_ = writer;
  if (!writer_) return;
  for (std::size_t i = 0; i < trace_.frames.size(); ++i) writer_->frame(i + 1, trace_.frames[i]);
  for (const auto& e : log_.events) writer_->event(e);
  for (const auto& s : log_.samples) writer_->sample(s);
  writer_->flush();
}

void Recorder::step(const InputFrame& in) {
  if (session_.finished()) return;
  wayfind::step(*world_, agent_, session_, in);
  trace_.frames.push_back(in);
  if (writer_) writer_->frame(session_.tick, in);
  if (session_.tick % kSampleEveryTicks == 0) record_sample();
}

void Recorder::record_sample() {
  std::string tags;
  for (; events_seen_ < session_.event_log.size(); ++events_seen_) {
    const Event& e = session_.event_log[events_seen_];
    if (!tags.empty()) tags += ';';
    tags += event_tag(e);
    log_.events.push_back(e);
    if (writer_) writer_->event(e);
  }
  log_.samples.push_back(sample(agent_, session_, gaze_raycast(*world_, agent_), std::move(tags)));
  if (writer_) writer_->sample(log_.samples.back());
}

SessionLog replay(const World& world, const InputTrace& trace) {
  if (trace.header.fixture_hash != world.spec().hash) {
    throw MismatchError("trace fixture hash " + trace.header.fixture_hash + " does not match building hash " +
                        world.spec().hash);
  }
  Recorder rec(world, trace.header.participant.empty() ? "replay" : trace.header.participant,
               trace.header.eye_height_cm, trace.header.seed);
  for (const auto& f : trace.frames) rec.step(f);
  return rec.log();
}

}  // namespace wayfind
