#include <algorithm>

#include "mcfsm/analysis.hpp"
#include "mcfsm/error.hpp"
#include "mcfsm/service.hpp"

namespace mcfsm::service {

struct SessionManager::Live {
  std::shared_ptr<const ResolvedModel> model;
  std::mutex inject_mutex;  // the single consumer

  mutable std::mutex mutex;  // guards everything below
  std::condition_variable changed;
  GlobalState state;
  std::vector<MacroStepTrace> history;
  std::vector<Json> messages;  // trace messages, seq = index + 1
  bool closed = false;
};

Json state_json(const ResolvedModel& model, const GlobalState& state) {
  Json j = Json::object();
  for (MachineIndex m = 0; m < state.size(); ++m) {
    j[model.machines()[m].path] = model.state_name(m, state[m]);
  }
  return j;
}

Json trace_json(const ResolvedModel& model, const MacroStepTrace& trace) {
  return Json::parse(trace_to_jsonl(model, trace));
}

Json model_graph_json(const ResolvedModel& model) {
  Json j;
  j["model"] = model.name();
  j["machines"] = Json::array();
  for (MachineIndex m = 0; m < model.machines().size(); ++m) {
    const auto& machine = model.machines()[m];
    Json jm;
    jm["name"] = machine.name;
    jm["path"] = machine.path;
    jm["class"] = machine.class_name;
    jm["start"] = machine.states[machine.start];
    jm["nodes"] = machine.states;
    jm["edges"] = Json::array();
    for (const auto& edge : model.machine_edges(m)) {
      Json je;
      je["id"] = model.edge_path(static_cast<EdgeIndex>(&edge - model.edges().data()));
      je["src"] = machine.states[edge.id.src];
      je["dst"] = machine.states[edge.id.dst];
      Json above = Json::array();
      for (EventRef c : edge.captures) above.push_back(model.event_path(c));
      for (const auto& l : edge.x_labels) above.push_back(l);
      je["above"] = std::move(above);
      je["below"] = edge.y_labels;
      jm["edges"].push_back(std::move(je));
    }
    j["machines"].push_back(std::move(jm));
  }
  j["external_events"] = Json::array();
  for (const auto& e : model.external_events()) j["external_events"].push_back(e);
  return j;
}

Json diagnostics_json(const std::vector<dsl::Diagnostic>& diagnostics) {
  Json list = Json::array();
  for (const auto& d : diagnostics) {
    Json j;
    j["severity"] = d.severity == dsl::Severity::Error     ? "error"
                    : d.severity == dsl::Severity::Warning ? "warning"
                                                           : "note";
    j["code"] = to_string(d.code);
    j["line"] = d.span.line;
    j["column"] = d.span.column;
    j["message"] = d.message;
    list.push_back(std::move(j));
  }
  return list;
}

namespace {

Json message(std::string_view type, const Json& session, std::uint64_t seq, Json payload) {
  Json j;
  j["type"] = type;
  j["session"] = session;
  j["seq"] = seq;
  j["payload"] = std::move(payload);
  return j;
}

Json error_message(const Json& session, std::string_view code, std::string_view text) {
  Json payload;
  payload["code"] = code;
  payload["message"] = text;
  return message("error", session, 0, std::move(payload));
}

}  // namespace

SessionManager::SessionManager(ServiceOptions options) : options_(std::move(options)) {}

SessionManager::~SessionManager() { shutdown(); }

std::shared_ptr<SessionManager::Live> SessionManager::find(const std::string& session) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::SessionNotFound, "no session '" + session + "'");
  }
  return it->second;
}

SessionManager::Created SessionManager::create_session(std::string_view source,
                                                       std::string_view mcfsm_class) {
  dsl::CompileResult compiled = dsl::compile(source, mcfsm_class);
  if (!compiled.ok()) return {std::nullopt, std::move(compiled.diagnostics)};
  auto live = std::make_shared<Live>();
  live->model = std::make_shared<const ResolvedModel>(std::move(*compiled.model));
  live->state = initial_state(*live->model);
  std::unique_lock lock(sessions_mutex_);
  std::string id = "s" + std::to_string(next_id_++);
  sessions_.emplace(id, std::move(live));
  return {id, std::move(compiled.diagnostics)};
}

Json SessionManager::inject(const std::string& session, std::string_view event) {
  auto live = find(session);
  std::lock_guard consumer(live->inject_mutex);
  const ResolvedModel& model = *live->model;
  const EventRef ext = model.resolve_external(event);
  GlobalState pre;
  {
    std::lock_guard lock(live->mutex);
    pre = live->state;
  }
  // The cascade runs outside the snapshot lock; queries keep seeing `pre`
  // until the whole macro-step is committed below.
  MacroStepResult result = macro_step(model, pre, ext, options_.runtime);
  std::lock_guard lock(live->mutex);
  live->state = result.state;
  live->history.push_back(result.trace);
  const std::uint64_t seq = live->messages.size() + 1;
  live->messages.push_back(message("trace", session, seq, trace_json(model, result.trace)));
  live->changed.notify_all();
  return live->messages.back();
}

Json SessionManager::query(const std::string& session, std::string_view what) {
  auto live = find(session);
  const ResolvedModel& model = *live->model;
  GlobalState state;
  std::uint64_t seq = 0;
  std::size_t history = 0;
  {
    std::lock_guard lock(live->mutex);
    state = live->state;
    seq = live->messages.size();
    history = live->history.size();
  }
  Json result;
  if (what == "state") {
    result = state_json(model, state);
  } else if (what == "history") {
    result = history;
  } else if (what == "bound-report") {
    result = Json::parse(analysis::bound_report_json(model, analysis::cascade_bound(model)));
  } else if (what == "model-graph") {
    result = model_graph_json(model);
  } else if (what == "reachable-count") {
    analysis::ReachOptions options;
    options.max_states = options_.reachable_cap;
    options.cascade_cap = options_.runtime.cascade_cap;
    try {
      result["count"] = analysis::explore(model, options).states.size();
      result["capped"] = false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StateSpaceTooLarge) throw;
      result["count"] = options_.reachable_cap;
      result["capped"] = true;
    }
  } else {
    throw Error(ErrorCode::InvalidSelector, "unknown query '" + std::string(what) + "'");
  }
  Json payload;
  payload["what"] = what;
  payload["result"] = std::move(result);
  return message("query", session, seq, std::move(payload));
}

std::vector<Json> SessionManager::traces_after(const std::string& session, std::uint64_t after,
                                               std::chrono::milliseconds wait) {
  auto live = find(session);
  std::unique_lock lock(live->mutex);
  live->changed.wait_for(lock, wait, [&] { return live->closed || live->messages.size() > after; });
  std::vector<Json> out;
  for (std::uint64_t i = after; i < live->messages.size(); ++i) out.push_back(live->messages[i]);
  return out;
}

void SessionManager::shutdown() {
  std::unique_lock lock(sessions_mutex_);
  for (auto& [id, live] : sessions_) {
    std::lock_guard inner(live->mutex);
    live->closed = true;
    live->changed.notify_all();
  }
}

Json SessionManager::handle(const nlohmann::json& request) {
  Json session = nullptr;
  try {
    if (!request.is_object()) return error_message(session, "ParseError", "request must be an object");
    if (request.contains("session") && request["session"].is_string()) session = request["session"];
    const std::string type = request.value("type", "");
    const nlohmann::json payload = request.value("payload", nlohmann::json::object());
    if (type == "create") {
      Created created = create_session(payload.value("source", ""), payload.value("class", ""));
      if (!created.session) {
        Json p;
        p["diagnostics"] = diagnostics_json(created.diagnostics);
        return message("diag", nullptr, 0, std::move(p));
      }
      auto live = find(*created.session);
      Json p;
      p["model"] = live->model->name();
      p["state"] = state_json(*live->model, live->state);
      p["external_events"] = Json::array();
      for (const auto& e : live->model->external_events()) p["external_events"].push_back(e);
      p["diagnostics"] = diagnostics_json(created.diagnostics);
      return message("create", *created.session, 0, std::move(p));
    }
    if (!session.is_string()) return error_message(session, "InvalidModel", "missing session");
    if (type == "inject") return inject(session.get<std::string>(), payload.value("event", ""));
    if (type == "query") return query(session.get<std::string>(), payload.value("what", ""));
    return error_message(session, "ParseError", "unknown message type '" + type + "'");
  } catch (const Error& e) {
    return error_message(session, to_string(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_message(session, "ParseError", e.what());
  }
}

std::string SessionManager::handle_text(std::string_view request) {
  nlohmann::json parsed = nlohmann::json::parse(request, nullptr, false);
  if (parsed.is_discarded()) return error_message(nullptr, "ParseError", "request is not JSON").dump();
  return handle(parsed).dump();
}

}  // namespace mcfsm::service
