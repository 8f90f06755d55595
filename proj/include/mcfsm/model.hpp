#pragma once

// Elaborated McFSM data model.
//
// A ResolvedModel is built once (by the DSL elaborator, the table reader or
// the switch-family generator) through ModelBuilder and is immutable from
// then on. Everything downstream (runtime, analysis, codegen, service) reads
// it through const accessors only.
//
// Indexing conventions:
//   - machines are numbered in declaration order;
//   - states are numbered per machine in order of first appearance;
//   - edges are numbered globally, machine-major, declaration order inside a
//     machine;
//   - dense event ids put the external events first (declaration order),
//     followed by one internal event per edge (edge index order).

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mcfsm {

using MachineIndex = std::uint32_t;
using StateIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;
using EventId = std::uint32_t;

enum class EventKind : std::uint8_t { External, Internal };

/// Identity of an event. External events are numbered by their position in
/// the model's external event list; an internal event *is* a fired edge.
class EventRef {
 public:
  constexpr EventRef() = default;

  static constexpr EventRef external(std::uint32_t index) noexcept {
    return EventRef(EventKind::External, index);
  }
  static constexpr EventRef internal(EdgeIndex edge) noexcept {
    return EventRef(EventKind::Internal, edge);
  }

  constexpr EventKind kind() const noexcept { return kind_; }
  constexpr bool is_external() const noexcept { return kind_ == EventKind::External; }
  constexpr bool is_internal() const noexcept { return kind_ == EventKind::Internal; }
  /// External position or edge index, depending on kind().
  constexpr std::uint32_t index() const noexcept { return index_; }

  friend constexpr auto operator<=>(const EventRef&, const EventRef&) = default;

 private:
  constexpr EventRef(EventKind kind, std::uint32_t index) noexcept
      : kind_(kind), index_(index) {}

  EventKind kind_ = EventKind::External;
  std::uint32_t index_ = 0;
};

/// The state pair (src, dst) of one machine; the internal event identity.
struct EdgeId {
  MachineIndex machine = 0;
  StateIndex src = 0;
  StateIndex dst = 0;

  friend constexpr auto operator<=>(const EdgeId&, const EdgeId&) = default;
};

/// Where a capture entry was introduced in the source.
struct Provenance {
  std::uint32_t line = 0;
  std::uint32_t column = 0;
  std::string statement;
};

struct ResolvedEdge {
  EdgeId id;
  std::string hop_name;  // "<src>_<dst>"
  std::vector<EventRef> captures;
  std::vector<Provenance> capture_origins;  // parallel to captures
  std::vector<std::string> x_labels;
  std::vector<std::string> y_labels;

  bool has_label(std::string_view label) const;
};

struct ResolvedMachine {
  std::string path;  // "/<Model>/<instance>"
  std::string name;  // instance name
  std::string class_name;
  std::vector<std::string> states;
  StateIndex start = 0;
  EdgeIndex first_edge = 0;
  std::uint32_t edge_count = 0;

  std::optional<StateIndex> find_state(std::string_view state) const;
};

/// One state per machine, indexed by machine position.
class GlobalState {
 public:
  GlobalState() = default;
  explicit GlobalState(std::vector<StateIndex> assignment)
      : assignment_(std::move(assignment)) {}

  std::size_t size() const noexcept { return assignment_.size(); }
  StateIndex operator[](MachineIndex m) const { return assignment_[m]; }
  StateIndex& operator[](MachineIndex m) { return assignment_[m]; }
  std::span<const StateIndex> assignment() const noexcept { return assignment_; }

  friend auto operator<=>(const GlobalState&, const GlobalState&) = default;

 private:
  std::vector<StateIndex> assignment_;
};

struct GlobalStateHash {
  std::size_t operator()(const GlobalState& s) const noexcept;
};

class ResolvedModel {
 public:
  const std::string& name() const noexcept { return name_; }
  std::string root_path() const { return "/" + name_; }

  std::span<const ResolvedMachine> machines() const noexcept { return machines_; }
  std::span<const ResolvedEdge> edges() const noexcept { return edges_; }
  std::span<const ResolvedEdge> machine_edges(MachineIndex m) const;
  std::span<const std::string> external_events() const noexcept { return externals_; }
  std::span<const MachineIndex> dispatch_order() const noexcept { return dispatch_; }

  std::size_t event_count() const noexcept { return externals_.size() + edges_.size(); }
  EventId event_id(EventRef e) const noexcept {
    return e.is_external() ? e.index() : static_cast<EventId>(externals_.size() + e.index());
  }
  EventRef event_from_id(EventId id) const noexcept;

  /// Edge fired by machine `m` in `state` when offered `event`, if any.
  std::optional<EdgeIndex> transition(MachineIndex m, StateIndex state, EventRef event) const;

  /// Raw lookup used by the hot loops: -1 when nothing fires.
  std::int32_t transition_raw(MachineIndex m, StateIndex state, EventId event) const noexcept {
    return table_[table_offset_[m] + static_cast<std::size_t>(state) * event_count() + event];
  }

  std::string edge_path(EdgeIndex e) const;
  /// Edge name relative to the model root, e.g. "S1/up_down".
  std::string edge_name(EdgeIndex e) const;
  std::string event_path(EventRef e) const;
  std::string event_name(EventRef e) const;
  const std::string& state_name(MachineIndex m, StateIndex s) const;

  /// Accepts an instance name or its absolute path.
  std::optional<MachineIndex> find_machine(std::string_view name_or_path) const;
  /// Accepts an absolute event path or a leaf name that is unambiguous.
  /// Throws UnknownExternalEvent or AmbiguousEvent.
  EventRef resolve_external(std::string_view name_or_path) const;

 private:
  friend class ModelBuilder;

  std::string name_;
  std::vector<ResolvedMachine> machines_;
  std::vector<ResolvedEdge> edges_;
  std::vector<std::string> externals_;
  std::vector<MachineIndex> dispatch_;
  std::vector<std::size_t> table_offset_;
  std::vector<std::int32_t> table_;
};

GlobalState initial_state(const ResolvedModel& model);

struct ModelSize {
  std::size_t states = 0;
  std::size_t edges = 0;
  friend auto operator<=>(const ModelSize&, const ModelSize&) = default;
};

ModelSize model_size(const ResolvedModel& model);

bool is_valid_state(const ResolvedModel& model, const GlobalState& state);

/// "(up, up, yellow)"
std::string format_state(const ResolvedModel& model, const GlobalState& state);

struct EdgeHandle {
  MachineIndex machine = 0;
  std::uint32_t local = 0;
  friend auto operator<=>(const EdgeHandle&, const EdgeHandle&) = default;
};

/// A capture target while building: an external index or an edge handle.
using CaptureTarget = std::variant<std::uint32_t, EdgeHandle>;

/// Incremental construction of a ResolvedModel. build() validates every
/// model invariant and computes the transition tables; it throws mcfsm::Error
/// when an invariant is violated.
class ModelBuilder {
 public:
  explicit ModelBuilder(std::string name);

  MachineIndex add_machine(std::string name, std::string class_name);
  /// Returns the existing index when the state is already present.
  StateIndex add_state(MachineIndex m, std::string_view name);
  EdgeHandle add_edge(MachineIndex m, StateIndex src, StateIndex dst);
  std::optional<EdgeHandle> find_edge(MachineIndex m, StateIndex src, StateIndex dst) const;
  void add_label(EdgeHandle edge, std::string label);
  void set_start(MachineIndex m, StateIndex start);
  /// Idempotent; returns the external index.
  std::uint32_t add_external(std::string path);
  /// Returns false (and changes nothing) when the capture is already present.
  bool add_capture(EdgeHandle edge, CaptureTarget target, Provenance origin = {});
  void set_dispatch_order(std::vector<MachineIndex> order);

  std::size_t machine_count() const noexcept { return machines_.size(); }

  ResolvedModel build() &&;

 private:
  struct DraftEdge {
    StateIndex src;
    StateIndex dst;
    std::vector<CaptureTarget> captures;
    std::vector<Provenance> origins;
    std::vector<std::string> x_labels;
    std::vector<std::string> y_labels;
  };
  struct DraftMachine {
    std::string name;
    std::string class_name;
    std::vector<std::string> states;
    std::optional<StateIndex> start;
    std::vector<DraftEdge> edges;
  };

  std::string name_;
  std::vector<DraftMachine> machines_;
  std::vector<std::string> externals_;
  std::optional<std::vector<MachineIndex>> dispatch_;
};

}  // namespace mcfsm
