#pragma once

// Interactive simulation sessions behind a JSON message protocol, plus the
// HTTP transport that exposes them on a local TCP port. The protocol is
// described in docs/protocol.md.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcfsm/dsl.hpp"
#include "mcfsm/model.hpp"
#include "mcfsm/runtime.hpp"

namespace mcfsm::service {

using Json = nlohmann::ordered_json;

struct ServiceOptions {
  RuntimeOptions runtime;
  /// Limit for the reachable-count query; larger spaces report the cap.
  std::uint64_t reachable_cap = 100'000;
};

/// Thread-safe registry of sessions. Injections into one session are
/// serialized; queries read a consistent snapshot and never observe a
/// half-processed macro-step.
class SessionManager {
 public:
  explicit SessionManager(ServiceOptions options = {});
  ~SessionManager();

  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Dispatches one request document and returns the response document.
  /// Never throws for protocol or DSL problems; those become "error" or
  /// "diag" responses.
  Json handle(const nlohmann::json& request);
  std::string handle_text(std::string_view request);

  struct Created {
    std::optional<std::string> session;
    std::vector<dsl::Diagnostic> diagnostics;
  };
  Created create_session(std::string_view source, std::string_view mcfsm_class);

  /// Returns the "trace" message (with its sequence number). Throws Error.
  Json inject(const std::string& session, std::string_view event);
  /// what: state | bound-report | model-graph | reachable-count | history
  Json query(const std::string& session, std::string_view what);

  /// Trace messages with seq > after; blocks up to `wait` when none exist.
  /// Throws Error(SessionNotFound).
  std::vector<Json> traces_after(const std::string& session, std::uint64_t after,
                                 std::chrono::milliseconds wait);

  /// Wakes every waiting subscriber; further waits return immediately.
  void shutdown();

 private:
  struct Live;
  std::shared_ptr<Live> find(const std::string& session) const;

  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Message helpers shared with tests and the CLI.
Json state_json(const ResolvedModel& model, const GlobalState& state);
Json trace_json(const ResolvedModel& model, const MacroStepTrace& trace);
Json model_graph_json(const ResolvedModel& model);
Json diagnostics_json(const std::vector<dsl::Diagnostic>& diagnostics);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string static_dir;  // served at "/" when non-empty
};

/// HTTP transport: POST /api carries request/response documents,
/// GET /subscribe?session=ID&after=SEQ streams trace messages as
/// server-sent events.
class Server {
 public:
  Server(SessionManager& sessions, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the socket; returns the bound port, or -1 on failure.
  int bind();
  /// Serves until stop(); call after bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mcfsm::service
