#pragma once

// Macro-step execution of a ResolvedModel.
//
// One macro-step takes a single external event and processes it together with
// every internal (coupling) event it causes, until the XQueue has no internal
// events left. Each popped event is offered to every machine in dispatch
// order; a machine that has a transition for (current state, event) fires it,
// updates its state at once and pushes the fired edge as an internal event.
// Side-effect handlers run only after the cascade has quiesced.

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcfsm/error.hpp"
#include "mcfsm/model.hpp"

namespace mcfsm {

inline constexpr std::size_t kDefaultCascadeCap = 10'000;

struct RuntimeOptions {
  /// Maximum number of processed events per macro-step.
  std::size_t cascade_cap = kDefaultCascadeCap;
};

/// Event buffer: FIFO externals, FIFO internals, and every pending internal
/// event is popped before any pending external event.
class XQueue {
 public:
  void push(EventRef e);
  std::optional<EventRef> pop();

  bool empty() const noexcept { return internal_.empty() && external_.empty(); }
  bool has_internal() const noexcept { return !internal_.empty(); }
  std::size_t size() const noexcept { return internal_.size() + external_.size(); }

 private:
  std::deque<EventRef> internal_;
  std::deque<EventRef> external_;
};

struct MacroStepTrace {
  EventRef trigger;
  std::vector<EventRef> processed;
  std::vector<EdgeIndex> fired;
  GlobalState pre;
  GlobalState post;

  std::size_t step_count() const noexcept { return processed.size(); }
  friend bool operator==(const MacroStepTrace&, const MacroStepTrace&) = default;
};

/// Passed to side-effect handlers after a macro-step has quiesced.
struct HandlerContext {
  const ResolvedModel& model;
  const MacroStepTrace& trace;
  EdgeIndex edge;
  /// Queues an external event for a later macro-step.
  std::function<void(EventRef)> post;
};

using Handler = std::function<void(const HandlerContext&)>;

/// Side-effect callbacks bound to an edge or to a semantic label. For every
/// fired edge, edge-bound callbacks run first, then callbacks for each of the
/// edge's labels (x-labels, then y-labels, in declaration order).
class HandlerRegistry {
 public:
  void on_edge(EdgeIndex edge, Handler h) { by_edge_[edge].push_back(std::move(h)); }
  void on_label(std::string label, Handler h) { by_label_[std::move(label)].push_back(std::move(h)); }

  bool empty() const noexcept { return by_edge_.empty() && by_label_.empty(); }

  void dispatch(const ResolvedModel& model, const MacroStepTrace& trace,
                const std::function<void(EventRef)>& post) const;

 private:
  std::map<EdgeIndex, std::vector<Handler>> by_edge_;
  std::map<std::string, std::vector<Handler>, std::less<>> by_label_;
};

struct MacroStepResult {
  GlobalState state;
  MacroStepTrace trace;
  /// External events posted by handlers, for the next macro-steps.
  std::vector<EventRef> deferred;
};

/// Throws Error(UnknownExternalEvent) or Error(CascadeOverflow).
MacroStepResult macro_step(const ResolvedModel& model, const GlobalState& state, EventRef external,
                           const RuntimeOptions& options = {},
                           const HandlerRegistry* handlers = nullptr);

/// Trace-free variant for the exhaustive kernels: updates `state` in place and
/// returns the number of processed events. Same semantics as macro_step.
std::size_t advance(const ResolvedModel& model, GlobalState& state, EventRef external,
                    std::size_t cascade_cap = kDefaultCascadeCap);

/// Raised by run_sequence; `index()` is the position of the failing event.
class SequenceError : public Error {
 public:
  SequenceError(const Error& cause, std::size_t index)
      : Error(cause.code(), "event #" + std::to_string(index) + ": " + cause.what()),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

struct SequenceResult {
  GlobalState state;
  std::vector<MacroStepTrace> traces;
};

SequenceResult run_sequence(const ResolvedModel& model, const GlobalState& state,
                            std::span<const EventRef> events, const RuntimeOptions& options = {});

/// A live runtime session: model, current state, pending externals, handlers.
/// Single consumer; post() may be called from any thread.
class Session {
 public:
  explicit Session(std::shared_ptr<const ResolvedModel> model, RuntimeOptions options = {});

  const ResolvedModel& model() const noexcept { return *model_; }
  const GlobalState& state() const noexcept { return state_; }
  const std::vector<MacroStepTrace>& history() const noexcept { return history_; }
  HandlerRegistry& handlers() noexcept { return handlers_; }

  /// Thread-safe mailbox insertion.
  void post(EventRef external);
  /// Runs one macro-step immediately (drains nothing else).
  const MacroStepTrace& inject(EventRef external);
  /// Moves the mailbox into the XQueue and runs macro-steps until it is empty.
  std::size_t run_pending();

 private:
  std::shared_ptr<const ResolvedModel> model_;
  RuntimeOptions options_;
  GlobalState state_;
  XQueue queue_;
  HandlerRegistry handlers_;
  std::vector<MacroStepTrace> history_;
  std::mutex mailbox_mutex_;
  std::vector<EventRef> mailbox_;
};

// --- Trace serialization --------------------------------------------------------

/// One JSON object per line; fields: trigger, processed, fired, pre, post, steps.
std::string trace_to_jsonl(const ResolvedModel& model, const MacroStepTrace& trace);
/// Human-readable, several lines, prefixed by the 1-based macro-step number.
std::string trace_to_text(const ResolvedModel& model, const MacroStepTrace& trace,
                          std::size_t number);

}  // namespace mcfsm
