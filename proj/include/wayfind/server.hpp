#pragma once

// Live experiment service. A ServerSession is the transport-free protocol
// state machine (one per connection); SessionStore owns the output directory;
// Server carries newline-delimited JSON over TCP, one thread per connection.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "wayfind/simulation.hpp"
#include "wayfind/telemetry.hpp"

namespace wayfind {

using Json = nlohmann::json;

enum class SessionStatus { running, finished, aborted };
std::string_view to_string(SessionStatus s);

struct SessionRecord {
  std::string participant_id;  // as sent in hello
  std::string file_stem;       // participant id after collision suffixing
  double eye_height_cm = 0.0;
  std::uint64_t seed = 0;
  std::string fixture_hash;
  SessionStatus status = SessionStatus::running;
  std::filesystem::path log_path, events_path, trace_path;
};

inline constexpr const char* kSessionsIndexHeader =
    "participant_id,file_stem,eye_height_cm,seed,fixture_hash,status,log_file,events_file,trace_file";

/// Output directory of a server. Finished sessions land under their regular
/// names, aborted ones with a ".partial" suffix; every file is staged and
/// renamed into place before its index row is appended to sessions.csv.
/// Thread-safe.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  /// Unique file stem for a participant: the id itself, then id_2, id_3, ...
  std::string reserve(const std::string& participant_id);

  /// Directory that live sessions stream into; survives a crash.
  std::filesystem::path live_dir() const { return dir_ / ".live"; }

  /// Writes the three artifacts and appends the index row. An I/O failure
  /// marks the record aborted and keeps whatever was written as .partial.
  SessionRecord persist(SessionRecord record, const SessionLog& log, const InputTrace& trace);

  std::vector<SessionRecord> index() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  void append_index(const SessionRecord& r);

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::set<std::string> reserved_;
};

/// Protocol state machine for one client. All methods return the messages
/// to send, in order.
class ServerSession {
 public:
  ServerSession(const World& world, SessionStore& store, std::uint64_t seed);
  ~ServerSession();

  std::vector<Json> handle_line(const std::string& line);
  std::vector<Json> handle(const Json& msg);
  /// Realtime clock: runs `ticks` ticks on the held input.
  std::vector<Json> advance(std::uint64_t ticks);
  /// Ends the session; persists partial files once spawned.
  std::vector<Json> abort(const std::string& reason);

  bool spawned() const { return recorder_ != nullptr; }
  bool lockstep() const { return lockstep_; }
  bool done() const { return done_; }
  const std::optional<SessionRecord>& record() const { return record_; }
  const Recorder* recorder() const { return recorder_.get(); }

  static constexpr std::uint64_t kMaxTicksPerInput = 500;

 private:
  std::vector<Json> on_hello(const Json& msg);
  std::vector<Json> on_input(const Json& msg);
  std::vector<Json> violation(const std::string& what);
  void tick(std::vector<Json>& out);
  void finish(std::vector<Json>& out);

  const World* world_;
  SessionStore* store_;
  std::uint64_t seed_;
  std::string token_;
  bool lockstep_ = false;
  bool done_ = false;
  InputFrame held_;
  std::unique_ptr<LogWriter> live_;
  std::unique_ptr<Recorder> recorder_;
  std::size_t events_seen_ = 0;
  std::optional<SessionRecord> record_;
};

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::filesystem::path out_dir = "sessions";
  double idle_timeout_s = 120.0;  // <= 0 disables the timeout
  std::uint64_t base_seed = 1;
};

class Server {
 public:
  Server(const World& world, ServerOptions options);
  ~Server();

  /// Binds and listens; returns the bound port. Throws IoError.
  int start();
  /// Accept loop; returns after stop().
  void run();
  void stop();

  int port() const { return port_; }
  SessionStore& store() { return store_; }

 private:
  void serve_client(int fd, std::uint64_t seed);

  const World* world_;
  ServerOptions opt_;
  SessionStore store_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> next_seed_;
  std::mutex threads_mu_;
  std::vector<std::thread> threads_;
};

/// Blocking line-oriented TCP client, used by scripted clients and tests.
class LineClient {
 public:
  LineClient(const std::string& host, int port);
  ~LineClient();
  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  void send(const Json& msg);
  /// Next message, or nullopt on timeout or a closed connection.
  std::optional<Json> receive(double timeout_s = 5.0);

 private:
  int fd_ = -1;
  std::string buffer_;
};

/// Replay document for the viewer: trajectory, gaze points and events.
Json replay_document(const SessionLog& log, const std::string& fixture_hash);

}  // namespace wayfind
