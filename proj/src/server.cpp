#include "wayfind/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "wayfind/csv.hpp"
#include "wayfind/error.hpp"

namespace wayfind {

namespace fs = std::filesystem;

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::running: return "running";
    case SessionStatus::finished: return "finished";
    case SessionStatus::aborted: return "aborted";
  }
  return "running";
}

namespace {

SessionStatus status_from(const std::string& s) {
  if (s == "finished") return SessionStatus::finished;
  if (s == "aborted") return SessionStatus::aborted;
  if (s == "running") return SessionStatus::running;
  throw ParseError("sessions index: unknown status '" + s + "'");
}

Json vec_json(Vec3 p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}}; }

std::string new_token() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

Json error_msg(const std::string& what) { return {{"type", "error"}, {"message", what}}; }

bool taken(const fs::path& dir, const std::string& stem) {
  for (const auto& name : {log_filename(stem), events_filename(stem), trace_filename(stem)}) {
    if (fs::exists(dir / name) || fs::exists(dir / (name + ".partial"))) return true;
  }
  return false;
}

void send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) throw IoError("connection lost while sending");
    off += static_cast<std::size_t>(n);
  }
}

void send_messages(int fd, const std::vector<Json>& msgs) {
  std::string out;
  for (const auto& m : msgs) out += m.dump() + "\n";
  if (!out.empty()) send_all(fd, out);
}

}  // namespace

// ---------------------------------------------------------------- store

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  fs::create_directories(live_dir());
  const fs::path idx = dir_ / "sessions.csv";
  if (!fs::exists(idx)) {
    std::ofstream out(idx, std::ios::binary);
    if (!out) throw IoError("cannot create " + idx.string());
    out << kSessionsIndexHeader << "\n";
  }
}

std::string SessionStore::reserve(const std::string& participant_id) {
  log_filename(participant_id);  // validates the id
  std::lock_guard lock(mu_);
  std::string stem = participant_id;
  for (int k = 2; reserved_.count(stem) || taken(dir_, stem); ++k) stem = participant_id + "_" + std::to_string(k);
  reserved_.insert(stem);
  return stem;
}

SessionRecord SessionStore::persist(SessionRecord r, const SessionLog& log, const InputTrace& trace) {
  const std::string suffix = r.status == SessionStatus::finished ? "" : ".partial";
  const fs::path stage = dir_ / ".staging" / r.file_stem;
  const std::string names[3] = {log_filename(r.file_stem), events_filename(r.file_stem),
                                trace_filename(r.file_stem)};
  try {
    fs::remove_all(stage);
    fs::create_directories(stage);
    write_log(log, stage, true);
    write_trace(trace, stage, true);
    for (const auto& n : names) fs::rename(stage / n, dir_ / (n + suffix));
    fs::remove_all(stage);
    for (const auto& n : names) fs::remove(live_dir() / n);
  } catch (const std::exception&) {
    // Keep the streamed copies; they are complete up to the last flush.
    r.status = SessionStatus::aborted;
    for (const auto& n : names) {
      std::error_code ec;
      if (fs::exists(live_dir() / n)) fs::rename(live_dir() / n, dir_ / (n + ".partial"), ec);
    }
  }
  const std::string fin = r.status == SessionStatus::finished ? "" : ".partial";
  r.log_path = dir_ / (names[0] + fin);
  r.events_path = dir_ / (names[1] + fin);
  r.trace_path = dir_ / (names[2] + fin);
  append_index(r);
  return r;
}

void SessionStore::append_index(const SessionRecord& r) {
  std::lock_guard lock(mu_);
  std::ofstream out(dir_ / "sessions.csv", std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to sessions.csv");
  char eye[32];
  std::snprintf(eye, sizeof eye, "%.3f", r.eye_height_cm);
  out << csv::join({r.participant_id, r.file_stem, eye, std::to_string(r.seed), r.fixture_hash,
                    std::string(to_string(r.status)), r.log_path.filename().string(),
                    r.events_path.filename().string(), r.trace_path.filename().string()})
      << "\n";
  out.flush();
  if (!out) throw IoError("cannot append to sessions.csv");
}

std::vector<SessionRecord> SessionStore::index() const {
  std::lock_guard lock(mu_);
  std::ifstream in(dir_ / "sessions.csv", std::ios::binary);
  if (!in) throw IoError("cannot open sessions.csv");
  std::string line;
  std::getline(in, line);
  std::vector<SessionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    double eye = 0.0;
    long long seed = 0;
    if (f.size() != 9 || !csv::parse_double(f[2], eye) || !csv::parse_int(f[3], seed)) {
      throw ParseError("sessions index: malformed row");
    }
    SessionRecord r;
    r.participant_id = f[0];
    r.file_stem = f[1];
    r.eye_height_cm = eye;
    r.seed = static_cast<std::uint64_t>(seed);
    r.fixture_hash = f[4];
    r.status = status_from(f[5]);
    r.log_path = dir_ / f[6];
    r.events_path = dir_ / f[7];
    r.trace_path = dir_ / f[8];
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------- session

ServerSession::ServerSession(const World& world, SessionStore& store, std::uint64_t seed)
    : world_(&world), store_(&store), seed_(seed) {}

ServerSession::~ServerSession() = default;

std::vector<Json> ServerSession::handle_line(const std::string& line) {
  if (done_) return {};
  Json msg;
  try {
    msg = Json::parse(line);
  } catch (const Json::parse_error&) {
    return violation("malformed message");
  }
  return handle(msg);
}

std::vector<Json> ServerSession::handle(const Json& msg) {
  if (done_) return {};
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) return violation("message has no type");
  const std::string type = msg["type"];
  try {
    if (type == "hello") return on_hello(msg);
    if (type == "input") return on_input(msg);
  } catch (const Json::exception&) {
    return violation("malformed " + type + " payload");
  } catch (const InvalidArgument& e) {
    return violation(e.what());
  }
  return violation("unexpected message type '" + type + "'");
}

std::vector<Json> ServerSession::violation(const std::string& what) {
  std::vector<Json> out{error_msg(what)};
  for (auto& m : abort("protocol violation")) out.push_back(std::move(m));
  return out;
}

std::vector<Json> ServerSession::on_hello(const Json& msg) {
  if (spawned()) return violation("duplicate hello");
  const std::string participant = msg.at("participant_id").get<std::string>();
  const double eye = msg.at("eye_height_cm").get<double>();
  if (!(eye >= kMinEyeHeightCm && eye <= kMaxEyeHeightCm)) {
    throw InvalidArgument("eye_height_cm must be within [120, 220]");
  }
  if (msg.contains("seed")) seed_ = msg["seed"].get<std::uint64_t>();
  const std::string clock = msg.value("clock", "realtime");
  if (clock != "realtime" && clock != "lockstep") throw InvalidArgument("clock must be realtime or lockstep");
  lockstep_ = clock == "lockstep";

  SessionRecord r;
  r.participant_id = participant;
  r.file_stem = store_->reserve(participant);
  r.eye_height_cm = eye;
  r.seed = seed_;
  r.fixture_hash = world_->spec().hash;
  record_ = r;

  recorder_ = std::make_unique<Recorder>(*world_, r.file_stem, eye, seed_);
  live_ = std::make_unique<LogWriter>(store_->live_dir(), r.file_stem, recorder_->trace().header, true);
  recorder_->attach(live_.get());
  token_ = new_token();
  events_seen_ = recorder_->session().event_log.size();

  const AgentState& a = recorder_->agent();
  const Assignment& first = recorder_->session().assignments.front();
  return {Json{{"type", "spawn"},
               {"token", token_},
               {"pos", vec_json(a.pos)},
               {"yaw", a.yaw},
               {"fixture_hash", r.fixture_hash},
               {"assignment", {{"id", first.id}, {"message", first.message}}}}};
}

std::vector<Json> ServerSession::on_input(const Json& msg) {
  if (!spawned()) return violation("not spawned");
  if (msg.value("token", std::string{}) != token_) return violation("bad session token");
  InputFrame in;
  in.move_held = msg.at("move_held").get<bool>();
  in.yaw = msg.at("yaw_deg").get<double>();
  in.pitch = msg.value("pitch_deg", 0.0);
  in.roll = msg.value("roll_deg", 0.0);
  validate_input(in);
  held_ = in;
  if (!lockstep_) {
    if (msg.contains("ticks")) throw InvalidArgument("ticks is only accepted with the lockstep clock");
    return {};
  }
  const auto ticks = msg.value("ticks", std::uint64_t{1});
  if (ticks < 1 || ticks > kMaxTicksPerInput) throw InvalidArgument("ticks must be within [1, 500]");
  return advance(ticks);
}

std::vector<Json> ServerSession::advance(std::uint64_t ticks) {
  std::vector<Json> out;
  for (std::uint64_t i = 0; i < ticks && spawned() && !done_; ++i) tick(out);
  return out;
}

void ServerSession::tick(std::vector<Json>& out) {
  recorder_->step(held_);
  const SessionState& s = recorder_->session();
  const auto& events = s.event_log;
  std::string exit_label;
  for (; events_seen_ < events.size(); ++events_seen_) {
    const Event& e = events[events_seen_];
    if (e.name == "assignment_start") {
      const Assignment& a = s.assignments[static_cast<std::size_t>(std::stoi(e.detail) - 1)];
      out.push_back({{"type", "message"}, {"text", a.message}, {"assignment", a.id}});
    } else if (e.name == "alarm_on") {
      out.push_back({{"type", "alarm"}, {"text", e.detail}});
    } else if (e.name == "exit_reached") {
      exit_label = e.detail;
    }
  }
  if (s.clock_ms % 100 == 0) {
    const AgentState& a = recorder_->agent();
    out.push_back({{"type", "state"},
                   {"t_ms", s.clock_ms},
                   {"pos", vec_json(a.pos)},
                   {"yaw", a.yaw},
                   {"pitch", a.pitch},
                   {"assignment", s.active_id()}});
  }
  if (s.finished()) {
    out.push_back({{"type", "end"}, {"exit_label", exit_label}});
    finish(out);
  }
}

void ServerSession::finish(std::vector<Json>& out) {
  done_ = true;
  live_->flush();
  record_->status = SessionStatus::finished;
  record_ = store_->persist(*record_, recorder_->log(), recorder_->trace());
  if (record_->status != SessionStatus::finished) out.push_back(error_msg("failed to persist session files"));
}

std::vector<Json> ServerSession::abort(const std::string& reason) {
  if (done_) return {};
  done_ = true;
  if (spawned()) {
    live_->flush();
    record_->status = SessionStatus::aborted;
    record_ = store_->persist(*record_, recorder_->log(), recorder_->trace());
  }
  return {Json{{"type", "end"}, {"reason", reason}}};
}

// ---------------------------------------------------------------- transport

Server::Server(const World& world, ServerOptions options)
    : world_(&world), opt_(std::move(options)), store_(opt_.out_dir), next_seed_(opt_.base_seed) {}

Server::~Server() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

int Server::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(opt_.port));
  if (::inet_pton(AF_INET, opt_.bind_address.c_str(), &addr.sin_addr) != 1) {
    throw IoError("invalid bind address " + opt_.bind_address);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw IoError("cannot bind port " + std::to_string(opt_.port));
  }
  if (::listen(listen_fd_, 16) != 0) throw IoError("listen() failed");
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  return port_;
}

void Server::run() {
  if (listen_fd_ < 0) start();
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(threads_mu_);
    threads_.emplace_back(&Server::serve_client, this, fd, next_seed_++);
  }
  std::lock_guard lock(threads_mu_);
  for (auto& t : threads_) t.join();
  threads_.clear();
}

void Server::stop() { stopping_ = true; }

void Server::serve_client(int fd, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  ServerSession session(*world_, store_, seed);
  std::string buffer;
  auto last_input = clock::now();
  auto last_tick = clock::now();
  const auto tick = std::chrono::milliseconds(kTickMs);
  try {
    while (!session.done()) {
      if (stopping_) {
        send_messages(fd, session.abort("server shutdown"));
        break;
      }
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, kTickMs) > 0) {
        char chunk[4096];
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) {
          session.abort("disconnected");
          break;
        }
        buffer.append(chunk, static_cast<std::size_t>(n));
        last_input = clock::now();
        std::size_t nl;
        while (!session.done() && (nl = buffer.find('\n')) != std::string::npos) {
          const std::string line = buffer.substr(0, nl);
          buffer.erase(0, nl + 1);
          const bool was_spawned = session.spawned();
          send_messages(fd, session.handle_line(line));
          if (!was_spawned && session.spawned()) last_tick = clock::now();
        }
      }
      const auto now = clock::now();
      if (session.spawned() && !session.lockstep() && !session.done()) {
        const auto due = static_cast<std::uint64_t>((now - last_tick) / tick);
        last_tick += tick * due;
        send_messages(fd, session.advance(due));
      }
      if (opt_.idle_timeout_s > 0 && !session.done() &&
          std::chrono::duration<double>(now - last_input).count() > opt_.idle_timeout_s) {
        send_messages(fd, session.abort("idle timeout"));
      }
    }
  } catch (const std::exception&) {
    session.abort("disconnected");
  }
  ::close(fd);
}

// ---------------------------------------------------------------- client

LineClient::LineClient(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw IoError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw IoError("invalid host " + host);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw IoError("cannot connect to " + host + ":" + std::to_string(port));
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

LineClient::~LineClient() {
  if (fd_ >= 0) ::close(fd_);
}

void LineClient::send(const Json& msg) { send_all(fd_, msg.dump() + "\n"); }

std::optional<Json> LineClient::receive(double timeout_s) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      Json j = Json::parse(buffer_.substr(0, nl));
      buffer_.erase(0, nl + 1);
      return j;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------- replay export

Json replay_document(const SessionLog& log, const std::string& fixture_hash) {
  Json traj = Json::array(), gaze = Json::array(), events = Json::array();
  for (const auto& s : log.samples) {
    traj.push_back({{"t_ms", s.t_ms},
                    {"x", s.x_cm},
                    {"y", s.y_cm},
                    {"z", s.z_cm},
                    {"yaw", s.yaw_deg},
                    {"assignment", s.assignment}});
    if (s.gaze) {
      gaze.push_back({{"t_ms", s.t_ms}, {"x", s.gaze->x}, {"y", s.gaze->y}, {"z", s.gaze->z}, {"target", s.gaze_target}});
    }
  }
  for (const auto& e : log.events) events.push_back({{"t_ms", e.t_ms}, {"event", e.name}, {"detail", e.detail}});
  return {{"format", "wayfind-replay/1"},
          {"fixture_hash", fixture_hash},
          {"participant_id", log.participant_id},
          {"trajectory", std::move(traj)},
          {"gaze", std::move(gaze)},
          {"events", std::move(events)}};
}

}  // namespace wayfind
