#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcfsm/model.hpp"
#include "mcfsm/runtime.hpp"

namespace mcfsm::analysis {

// --- Coupling graph and cascade bounds -------------------------------------------

/// Nodes are dense event ids. An arc a -> b exists when processing event a
/// can fire edge b, i.e. edge b captures a.
struct CouplingGraph {
  std::size_t node_count = 0;
  std::vector<std::vector<EventId>> successors;  // sorted ascending

  std::size_t arc_count() const;
};

CouplingGraph build_coupling_graph(const ResolvedModel& model);

struct EventBound {
  EventRef event;
  /// Processed-event bound (trigger included); nullopt means unbounded.
  std::optional<std::uint64_t> bound;
  /// Fired-transition bound, the secondary metric (bound - 1 when finite).
  std::optional<std::uint64_t> fired_bound;
  /// Longest causation path when bounded; path into a cycle, ending with
  /// the first repeated event, when unbounded.
  std::vector<EventRef> witness;
};

struct BoundReport {
  std::vector<EventBound> per_event;  // external declaration order

  const EventBound& at(EventRef external) const { return per_event.at(external.index()); }
};

/// Graph-theoretic worst case: every machine fires at most one edge per
/// processed event, so an event's cost is 1 plus, per machine, the most
/// expensive edge of that machine it can fire.
BoundReport cascade_bound(const ResolvedModel& model);

// --- Product automaton ---------------------------------------------------------

inline constexpr std::uint64_t kDefaultMaxStates = 1'000'000;

/// Explicit product over all machines. Global states are numbered in mixed
/// radix, first machine most significant.
class ProductFsm {
 public:
  ProductFsm() = default;
  ProductFsm(std::vector<std::uint32_t> radices, std::size_t event_count, std::uint64_t initial);

  std::uint64_t state_count() const noexcept { return state_count_; }
  std::size_t event_count() const noexcept { return event_count_; }
  std::uint64_t transition_count() const noexcept { return state_count_ * event_count_; }
  std::uint64_t initial() const noexcept { return initial_; }

  std::uint64_t next(std::uint64_t state, std::size_t external) const {
    return next_[state * event_count_ + external];
  }
  std::uint32_t steps(std::uint64_t state, std::size_t external) const {
    return steps_[state * event_count_ + external];
  }

  GlobalState decode(std::uint64_t index) const;
  std::uint64_t encode(const GlobalState& state) const;

  friend bool operator==(const ProductFsm&, const ProductFsm&) = default;

 private:
  friend ProductFsm expand_product_serial(const ResolvedModel&, std::uint64_t, std::size_t);
  friend ProductFsm expand_product_parallel(const ResolvedModel&, std::uint64_t, std::size_t);

  std::vector<std::uint32_t> radices_;
  std::uint64_t state_count_ = 0;
  std::size_t event_count_ = 0;
  std::uint64_t initial_ = 0;
  std::vector<std::uint64_t> next_;
  std::vector<std::uint32_t> steps_;
};

/// Π|Q_i|, or nullopt when it does not fit in 64 bits.
std::optional<std::uint64_t> product_state_count(const ResolvedModel& model);

struct ExpandOptions {
  std::uint64_t max_states = kDefaultMaxStates;
  std::size_t cascade_cap = kDefaultCascadeCap;
  bool parallel = true;
};

/// Runs the runtime from every (global state, external event) pair.
/// Throws StateSpaceTooLarge, or CascadeOverflow naming the first offending
/// pair in state order.
ProductFsm expand_product(const ResolvedModel& model, const ExpandOptions& options = {});
/// Serial reference kernel.
ProductFsm expand_product_serial(const ResolvedModel& model, std::uint64_t max_states,
                                 std::size_t cascade_cap);
/// OpenMP kernel; identical output to the serial one.
ProductFsm expand_product_parallel(const ResolvedModel& model, std::uint64_t max_states,
                                   std::size_t cascade_cap);

// --- Reachability ------------------------------------------------------------------

struct ReachOptions {
  std::uint64_t max_states = kDefaultMaxStates;
  std::size_t cascade_cap = kDefaultCascadeCap;
  bool parallel = true;
};

struct ReachResult {
  std::vector<GlobalState> states;  // BFS discovery order
  /// For each state, the index of its BFS parent and the event taken
  /// (the initial state is its own parent).
  std::vector<std::size_t> parent;
  std::vector<EventRef> via;

  /// Shortest external-event path from the initial state to states[i].
  std::vector<EventRef> path_to(std::size_t i) const;
};

/// Level-synchronous BFS from the initial state over external events in
/// declaration order. Throws StateSpaceTooLarge beyond options.max_states.
ReachResult explore(const ResolvedModel& model, const ReachOptions& options = {});
ReachResult explore_serial(const ResolvedModel& model, std::uint64_t max_states,
                           std::size_t cascade_cap);
ReachResult explore_parallel(const ResolvedModel& model, std::uint64_t max_states,
                             std::size_t cascade_cap);

std::vector<GlobalState> reachable_states(const ResolvedModel& model,
                                          const ReachOptions& options = {});

// --- Forbidden states ---------------------------------------------------------------

struct StateConstraint {
  MachineIndex machine = 0;
  StateIndex state = 0;
};

/// Conjunction of (instance = state) constraints.
struct Predicate {
  std::vector<StateConstraint> all_of;

  bool matches(const GlobalState& s) const;
};

/// Parses "S1=down & Lights=green" (also accepts '∧', "&&", "and" or ','
/// as separators, and instance paths). Throws UnknownPath.
Predicate parse_predicate(const ResolvedModel& model, std::string_view text);

struct ForbiddenResult {
  bool holds_never = true;
  /// Shortest external-event sequence reaching a violating state.
  std::optional<std::vector<EventRef>> witness;
  std::optional<GlobalState> reached;
};

ForbiddenResult check_forbidden(const ResolvedModel& model, const Predicate& predicate,
                                const ReachOptions& options = {});

// --- Scaling family -----------------------------------------------------------------

/// DSL text for n switches driving one m-level cyclic indicator, following
/// the ComboSwitches wiring. m == 3 keeps the green/yellow/red names.
std::string switch_family_source(int switches, int levels);

/// Elaborated switch family; throws Error(InvalidModel) for n < 1 or m < 2.
ResolvedModel generate_switch_family(int switches, int levels);

// --- Reports and visualisation ------------------------------------------------------

std::string bound_report_json(const ResolvedModel& model, const BoundReport& report);
std::string bound_report_text(const ResolvedModel& model, const BoundReport& report);

std::string to_dot(const ResolvedModel& model);
std::string to_dot(const ResolvedModel& model, const ProductFsm& product);
std::string to_dot(const ResolvedModel& model, const CouplingGraph& graph);

}  // namespace mcfsm::analysis
