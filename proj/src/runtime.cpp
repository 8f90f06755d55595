#include "mcfsm/runtime.hpp"

#include <nlohmann/json.hpp>

namespace mcfsm {

void XQueue::push(EventRef e) {
  (e.is_internal() ? internal_ : external_).push_back(e);
}

std::optional<EventRef> XQueue::pop() {
  auto& segment = internal_.empty() ? external_ : internal_;
  if (segment.empty()) return std::nullopt;
  EventRef e = segment.front();
  segment.pop_front();
  return e;
}

void HandlerRegistry::dispatch(const ResolvedModel& model, const MacroStepTrace& trace,
                               const std::function<void(EventRef)>& post) const {
  if (empty()) return;
  for (EdgeIndex edge : trace.fired) {
    const HandlerContext ctx{model, trace, edge, post};
    if (auto it = by_edge_.find(edge); it != by_edge_.end()) {
      for (const auto& h : it->second) h(ctx);
    }
    const auto& e = model.edges()[edge];
    for (const auto* labels : {&e.x_labels, &e.y_labels}) {
      for (const auto& label : *labels) {
        if (auto it = by_label_.find(label); it != by_label_.end()) {
          for (const auto& h : it->second) h(ctx);
        }
      }
    }
  }
}

namespace {

void check_external(const ResolvedModel& model, EventRef e) {
  if (!e.is_external() || e.index() >= model.external_events().size()) {
    throw Error(ErrorCode::UnknownExternalEvent,
                e.is_external() ? "external event #" + std::to_string(e.index()) + " does not exist"
                                : "internal events cannot be injected");
  }
}

struct NoRecord {
  void processed(EventRef) {}
  void fired(EdgeIndex) {}
};

struct TraceRecord {
  MacroStepTrace& trace;
  void processed(EventRef e) { trace.processed.push_back(e); }
  void fired(EdgeIndex e) { trace.fired.push_back(e); }
};

/// The single cascade loop shared by macro_step and advance.
template <class Record>
std::size_t cascade(const ResolvedModel& model, GlobalState& state, EventRef external,
                    std::size_t cap, Record&& record) {
  check_external(model, external);
  XQueue queue;
  queue.push(external);
  std::size_t processed = 0;
  const auto dispatch = model.dispatch_order();
  const auto edges = model.edges();
  while (auto event = queue.pop()) {
    if (processed == cap) {
      throw Error(ErrorCode::CascadeOverflow,
                  "cascade of " + model.event_path(external) + " exceeded " + std::to_string(cap) +
                      " processed events");
    }
    ++processed;
    record.processed(*event);
    const EventId id = model.event_id(*event);
    for (MachineIndex m : dispatch) {
      const std::int32_t edge = model.transition_raw(m, state[m], id);
      if (edge < 0) continue;
      state[m] = edges[static_cast<std::size_t>(edge)].id.dst;
      record.fired(static_cast<EdgeIndex>(edge));
      queue.push(EventRef::internal(static_cast<EdgeIndex>(edge)));
    }
  }
  return processed;
}

}  // namespace

MacroStepResult macro_step(const ResolvedModel& model, const GlobalState& state, EventRef external,
                           const RuntimeOptions& options, const HandlerRegistry* handlers) {
  MacroStepResult result;
  result.trace.trigger = external;
  result.trace.pre = state;
  result.state = state;
  cascade(model, result.state, external, options.cascade_cap, TraceRecord{result.trace});
  result.trace.post = result.state;
  if (handlers) {
    handlers->dispatch(model, result.trace, [&](EventRef e) {
      check_external(model, e);
      result.deferred.push_back(e);
    });
  }
  return result;
}

std::size_t advance(const ResolvedModel& model, GlobalState& state, EventRef external,
                    std::size_t cascade_cap) {
  return cascade(model, state, external, cascade_cap, NoRecord{});
}

SequenceResult run_sequence(const ResolvedModel& model, const GlobalState& state,
                            std::span<const EventRef> events, const RuntimeOptions& options) {
  SequenceResult result{state, {}};
  result.traces.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    try {
      auto step = macro_step(model, result.state, events[i], options);
      result.state = std::move(step.state);
      result.traces.push_back(std::move(step.trace));
    } catch (const Error& e) {
      throw SequenceError(e, i);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

Session::Session(std::shared_ptr<const ResolvedModel> model, RuntimeOptions options)
    : model_(std::move(model)), options_(options), state_(initial_state(*model_)) {}

void Session::post(EventRef external) {
  std::lock_guard lock(mailbox_mutex_);
  mailbox_.push_back(external);
}

const MacroStepTrace& Session::inject(EventRef external) {
  auto result = macro_step(*model_, state_, external, options_, &handlers_);
  state_ = std::move(result.state);
  history_.push_back(std::move(result.trace));
  for (EventRef e : result.deferred) queue_.push(e);
  return history_.back();
}

std::size_t Session::run_pending() {
  {
    std::lock_guard lock(mailbox_mutex_);
    for (EventRef e : mailbox_) queue_.push(e);
    mailbox_.clear();
  }
  std::size_t steps = 0;
  while (auto e = queue_.pop()) {
    inject(*e);
    ++steps;
  }
  return steps;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json state_json(const ResolvedModel& model, const GlobalState& state) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (MachineIndex m = 0; m < state.size(); ++m) {
    j[model.machines()[m].path] = model.state_name(m, state[m]);
  }
  return j;
}

}  // namespace

std::string trace_to_jsonl(const ResolvedModel& model, const MacroStepTrace& trace) {
  nlohmann::ordered_json j;
  j["trigger"] = model.event_path(trace.trigger);
  j["processed"] = nlohmann::ordered_json::array();
  for (EventRef e : trace.processed) j["processed"].push_back(model.event_path(e));
  j["fired"] = nlohmann::ordered_json::array();
  for (EdgeIndex e : trace.fired) j["fired"].push_back(model.edge_path(e));
  j["pre"] = state_json(model, trace.pre);
  j["post"] = state_json(model, trace.post);
  j["steps"] = trace.step_count();
  return j.dump();
}

std::string trace_to_text(const ResolvedModel& model, const MacroStepTrace& trace,
                          std::size_t number) {
  std::string out = "#" + std::to_string(number) + " " + model.event_name(trace.trigger) + "\n";
  out += "  fired:";
  if (trace.fired.empty()) out += " (none)";
  for (std::size_t i = 0; i < trace.fired.size(); ++i) {
    out += (i ? ", " : " ") + model.edge_name(trace.fired[i]);
  }
  out += "\n  state: " + format_state(model, trace.pre) + " -> " + format_state(model, trace.post) +
         "  steps=" + std::to_string(trace.step_count()) + "\n";
  return out;
}

}  // namespace mcfsm
